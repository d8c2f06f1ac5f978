#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "tabfuse/errors.hpp"
#include "tabfuse/fusion.hpp"

namespace tabfuse {
namespace {

TableSegment make_segment(const std::string& id, std::vector<std::string> header, std::vector<std::string> cells) {
    TableSegment s;
    s.id = id;
    s.table_id = id.substr(0, id.find('#'));
    s.header = std::move(header);
    s.cells = std::move(cells);
    s.extrema_flags.assign(s.cells.size(), Extremum::None);
    s.ordinal_token = "1st";
    s.metadata = {"Lakers seasons", "Results", ""};
    return s;
}

Passage make_passage(const std::string& id, std::vector<std::string> sentences) {
    Passage p;
    p.id = id;
    p.title = id;
    for (const auto& s : sentences) p.text += (p.text.empty() ? "" : " ") + s;
    p.sentences = std::move(sentences);
    return p;
}

FusedBlock sample_block() {
    FusedBlock f;
    f.segment = make_segment("t#0", {"Year", "Coach"}, {"1966", "Fred Schaus Jr"});
    f.id = f.segment.id;
    f.passages = {make_passage("p0", {"Fred Schaus was a coach.", "He was born in 1925."}),
                  make_passage("p1", {"The Lakers play in Los Angeles."})};
    return f;
}

TEST(BuildFusedPool, PassagesFollowLinkOrder) {
    const std::vector<TableSegment> segs = {make_segment("t#0", {"a"}, {"x"}), make_segment("t#1", {"a"}, {"y"})};
    const std::vector<Passage> ps = {make_passage("p0", {"A."}), make_passage("p1", {"B."})};
    const auto pool = build_fused_pool(segs, ps, GoldLinks{{"t#0", {"p1", "p0"}}});
    ASSERT_EQ(pool.size(), 2U);
    EXPECT_EQ(pool[0].id, "t#0");
    ASSERT_EQ(pool[0].passages.size(), 2U);
    EXPECT_EQ(pool[0].passages[0].id, "p1");
    EXPECT_EQ(pool[0].passages[1].id, "p0");
    EXPECT_TRUE(pool[1].passages.empty());
}

TEST(BuildFusedPool, DanglingLinkRejected) {
    const std::vector<TableSegment> segs = {make_segment("t#0", {"a"}, {"x"})};
    EXPECT_THROW(build_fused_pool(segs, {}, GoldLinks{{"t#0", {"missing"}}}), DanglingLinkError);
}

TEST(BuildFusedPool, BijectionWithSegments) {
    const auto fx = testing::make_directional_fixture();
    const auto pool = build_fused_pool(fx.corpus.segments, fx.corpus.passages, fx.corpus.links);
    ASSERT_EQ(pool.size(), fx.corpus.segments.size());
    std::set<std::string> ids;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        EXPECT_EQ(pool[i].segment, fx.corpus.segments[i]);
        EXPECT_EQ(pool[i].id, fx.corpus.segments[i].id);
        ids.insert(pool[i].id);
    }
    EXPECT_EQ(ids.size(), pool.size());
}

TEST(BuildFusedPool, FromLinkResults) {
    const std::vector<TableSegment> segs = {make_segment("t#0", {"a"}, {"x"})};
    const std::vector<Passage> ps = {make_passage("p0", {"A."})};
    LinkResult r;
    r.segment_id = "t#0";
    r.linked = {{"p0", 3.0}};
    const auto pool = build_fused_pool(segs, ps, std::map<std::string, LinkResult>{{"t#0", r}});
    ASSERT_EQ(pool[0].passages.size(), 1U);
    EXPECT_EQ(pool[0].passages[0].id, "p0");
}

TEST(FusedJsonl, RoundTrip) {
    const auto dir = testing::data_dir() / "fixture";
    const Corpus c = load_corpus(CorpusPaths{dir / "tables.jsonl", dir / "passages.jsonl", dir / "links.jsonl"});
    const auto pool = build_fused_pool(c.segments, c.passages, c.links);
    std::stringstream buf;
    write_fused_jsonl(buf, pool);
    EXPECT_EQ(load_fused_jsonl(buf, c), pool);
}

TEST(IctPair, DropsHalfOfDroppableWords) {
    const FusedBlock block = sample_block();
    const std::size_t w = ict_droppable_words(block.segment).size();
    ASSERT_EQ(w, 7U);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const IctPair pair = make_ict_pair(block, seed);
        EXPECT_EQ(pair.kept_positions.size(), w - w / 2);
        EXPECT_TRUE(std::is_sorted(pair.kept_positions.begin(), pair.kept_positions.end()));
    }
}

TEST(IctPair, SurvivorsKeepOrderAndSentenceIsVerbatim) {
    const FusedBlock block = sample_block();
    const auto words = ict_droppable_words(block.segment);
    std::set<std::string> sentences;
    for (const auto& p : block.passages) sentences.insert(p.sentences.begin(), p.sentences.end());
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const IctPair pair = make_ict_pair(block, seed);
        ASSERT_TRUE(sentences.count(pair.sentence)) << pair.sentence;
        ASSERT_FALSE(pair.segment_only);
        const std::string& q = pair.pseudo_query;
        ASSERT_GE(q.size(), pair.sentence.size());
        EXPECT_EQ(q.substr(q.size() - pair.sentence.size()), pair.sentence);
        std::size_t cursor = 0;
        for (std::size_t pos : pair.kept_positions) {
            const auto at = q.find(words[pos], cursor);
            ASSERT_NE(at, std::string::npos) << words[pos];
            cursor = at + words[pos].size();
        }
        for (const char* header : {"Year", "Coach"}) EXPECT_NE(q.find(header), std::string::npos);
    }
}

TEST(IctPair, SinglePassageSingleSentenceIsForced) {
    FusedBlock block = sample_block();
    block.passages = {make_passage("p0", {"Only sentence here."})};
    for (std::uint64_t seed = 0; seed < 10; ++seed) EXPECT_EQ(make_ict_pair(block, seed).sentence, "Only sentence here.");
}

TEST(IctPair, NoPassagesMarksSegmentOnly) {
    FusedBlock block = sample_block();
    block.passages.clear();
    const IctPair pair = make_ict_pair(block, 3);
    EXPECT_TRUE(pair.segment_only);
    EXPECT_TRUE(pair.sentence.empty());
}

TEST(IctPair, ZeroDroppableWords) {
    FusedBlock block;
    block.segment = make_segment("t#0", {"h"}, {""});
    block.segment.metadata = {};
    block.id = "t#0";
    block.passages = {make_passage("p", {"S."})};
    const IctPair pair = make_ict_pair(block, 0);
    EXPECT_TRUE(pair.kept_positions.empty());
    EXPECT_EQ(pair.pseudo_query, "h S.");
}

TEST(IctDataset, PairsPerBlockAndSeeds) {
    std::vector<FusedBlock> pool;
    for (const char* id : {"d#0", "b#0", "c#0", "a#0"}) {
        FusedBlock f = sample_block();
        f.id = id;
        f.segment.id = id;
        pool.push_back(f);
    }
    const auto pairs = generate_ict_dataset(pool, 2, 100);
    ASSERT_EQ(pairs.size(), 8U);
    const std::vector<std::string> order = {"a#0", "a#0", "b#0", "b#0", "c#0", "c#0", "d#0", "d#0"};
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ(pairs[i].target_block_id, order[i]);
        EXPECT_EQ(pairs[i].seed, 100 + i);
    }
    EXPECT_THROW(generate_ict_dataset(pool, 0, 1), Error);
}

TEST(IctDatasetProperty, ByteIdenticalAcrossRunsAndThreads) {
    const auto fx = testing::make_directional_fixture();
    const auto pool = build_fused_pool(fx.corpus.segments, fx.corpus.passages, fx.corpus.links);
    std::ostringstream a;
    std::ostringstream b;
    std::ostringstream c;
    write_ict_jsonl(a, generate_ict_dataset(pool, 3, 7, 1));
    write_ict_jsonl(b, generate_ict_dataset(pool, 3, 7, 1));
    write_ict_jsonl(c, generate_ict_dataset(pool, 3, 7, 4));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str(), c.str());
    EXPECT_FALSE(a.str().empty());
}

TEST(IctPairProperty, EachWordSurvivesAboutHalfTheTime) {
    FusedBlock block = sample_block();
    block.segment.cells = {"1966", "Fred Schaus"};
    const std::size_t w = ict_droppable_words(block.segment).size();
    ASSERT_EQ(w % 2, 0U);
    std::vector<std::size_t> kept(w, 0);
    const std::size_t samples = 10000;
    for (std::uint64_t seed = 0; seed < samples; ++seed) {
        for (std::size_t pos : make_ict_pair(block, seed).kept_positions) ++kept[pos];
    }
    for (std::size_t pos = 0; pos < w; ++pos) {
        EXPECT_NEAR(static_cast<double>(kept[pos]) / samples, 0.5, 0.02) << pos;
    }
}

TEST(IctJsonl, Fields) {
    IctPair p;
    p.pseudo_query = "q";
    p.target_block_id = "t#0";
    p.seed = 5;
    std::ostringstream out;
    write_ict_jsonl(out, {p});
    EXPECT_EQ(out.str(),
              "{\"pseudo_query\":\"q\",\"rng\":\"mt19937_64\",\"seed\":5,\"segment_only\":false,"
              "\"target_block_id\":\"t#0\"}\n");
}

}  // namespace
}  // namespace tabfuse
