#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "tabfuse/errors.hpp"
#include "tabfuse/eval.hpp"
#include "tabfuse/fusion.hpp"
#include "tabfuse/retrieve.hpp"

namespace tabfuse {
namespace {

struct Directional {
    testing::DirectionalFixture fx = testing::make_directional_fixture();
    BlockPool units = make_block_pool(fx.corpus);
    InvertedIndex index = build_index(units, {});
    BlockPool fused = make_fused_block_pool(build_fused_pool(fx.corpus.segments, fx.corpus.passages, fx.corpus.links));
    InvertedIndex fused_index = build_index(fused, {});
};

const Directional& directional() {
    static const Directional d;
    return d;
}

template <typename F>
double hit_rate(F&& retrieve) {
    const auto& qs = directional().fx.questions;
    int hits = 0;
    for (const auto& q : qs) hits += hits_at_budget(retrieve(q.question), q.gold_block_ids);
    return static_cast<double>(hits) / static_cast<double>(qs.size());
}

void expect_ranked_is_trace_sum(const RetrievalResult& r) {
    std::map<std::string, double> sums;
    for (const auto& t : r.trace) sums[t.block_id] += t.score;
    ASSERT_EQ(sums.size(), r.ranked.size());
    for (const auto& s : r.ranked) EXPECT_NEAR(s.score, sums.at(s.block_id), 1e-9) << s.block_id;
    EXPECT_TRUE(std::is_sorted(r.ranked.begin(), r.ranked.end(), ranks_before));
}

TEST(Defaults, MatchReferenceSettings) {
    EXPECT_EQ(IterSparseConfig{}.first_round, 20U);
    EXPECT_EQ(IterSparseConfig{}.per_query, 5U);
    EXPECT_EQ(IterSparseConfig{}.budget_tokens, 4096U);
    EXPECT_EQ(IterDenseConfig{}.fanouts, (std::vector<std::size_t>{8, 4, 2}));
    EXPECT_EQ(FusionConfig{}.top_fused, 15U);
    EXPECT_EQ(FusionConfig{}.budget_tokens, 4096U);
}

TEST(Config, Validation) {
    EXPECT_THROW((IterSparseConfig{3, 1, 10}.validate()), Error);
    EXPECT_THROW((IterSparseConfig{0, 1, 10}.validate()), Error);
    EXPECT_THROW((IterSparseConfig{2, 0, 10}.validate()), Error);
    EXPECT_THROW((IterDenseConfig{{}, 10}.validate()), Error);
    EXPECT_THROW((IterDenseConfig{{2, 0}, 10}.validate()), Error);
}

TEST(ScoreAggregator, SumsAndRanks) {
    ScoreAggregator agg;
    agg.add("b", 1.0);
    agg.add("a", 0.5);
    agg.add("a", 0.5);
    agg.add("c", 2.0);
    const auto r = agg.ranked();
    ASSERT_EQ(r.size(), 3U);
    EXPECT_EQ(r[0].block_id, "c");
    EXPECT_EQ(r[1].block_id, "a");
    EXPECT_EQ(r[2].block_id, "b");
    EXPECT_DOUBLE_EQ(r[1].score, 1.0);
    EXPECT_EQ(agg.unique_blocks(), 3U);
}

TEST(ScoreAggregatorProperty, OrderIndependentBitForBit) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<std::pair<std::string, double>> contributions;
    for (int i = 0; i < 300; ++i) contributions.emplace_back("b" + std::to_string(rng() % 20), u(rng) * 1e-3 + u(rng));
    ScoreAggregator reference;
    for (const auto& [id, s] : contributions) reference.add(id, s);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(contributions.begin(), contributions.end(), rng);
        ScoreAggregator agg;
        for (const auto& [id, s] : contributions) agg.add(id, s);
        ASSERT_EQ(agg.ranked(), reference.ranked());
    }
}

TEST(TruncateToBudget, WholeBlockPrefix) {
    BlockPool units;
    units.add(Block(Passage{"a", "", "one two three", {"one two three"}}));
    units.add(Block(Passage{"b", "", "one two", {"one two"}}));
    units.add(Block(Passage{"c", "", "one", {"one"}}));
    const std::vector<ScoredBlock> ranked = {{"a", 3}, {"b", 2}, {"c", 1}};
    const std::size_t la = units.at("a").token_count();
    const std::size_t lb = units.at("b").token_count();
    EXPECT_TRUE(truncate_to_budget(ranked, units, 0).empty());
    EXPECT_TRUE(truncate_to_budget(ranked, units, la - 1).empty());
    EXPECT_EQ(truncate_to_budget(ranked, units, la), (std::vector<std::string>{"a"}));
    EXPECT_EQ(truncate_to_budget(ranked, units, la + lb), (std::vector<std::string>{"a", "b"}));
    // "c" would fit after "b" fails, but truncation stops at the first misfit.
    EXPECT_EQ(truncate_to_budget(ranked, units, la + 1), (std::vector<std::string>{"a"}));
    EXPECT_THROW(truncate_to_budget({{"zzz", 1}}, units, 100), UnknownBlockError);
}

TEST(TruncateToBudgetProperty, MonotoneInBudget) {
    const auto& d = directional();
    const RetrievalResult r = iter_sparse(d.fx.questions[3].question, d.index, d.units, {});
    std::vector<std::string> previous;
    for (std::size_t budget = 0; budget <= 400; budget += 7) {
        const auto ids = truncate_to_budget(r.ranked, d.units, budget);
        ASSERT_GE(ids.size(), previous.size());
        ASSERT_TRUE(std::equal(previous.begin(), previous.end(), ids.begin()));
        std::size_t used = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            ASSERT_EQ(ids[i], r.ranked[i].block_id);
            used += d.units.at(ids[i]).token_count();
        }
        ASSERT_LE(used, budget);
        if (ids.size() < r.ranked.size()) ASSERT_GT(used + d.units.at(r.ranked[ids.size()].block_id).token_count(), budget);
        previous = ids;
    }
}

TEST(IterSparse, SmallHandCase) {
    // L = 2, M = 1: one segment and one passage from the question, then one
    // passage for the segment and one segment for the passage title.
    const Corpus c = testing::corpus_from_jsonl(
        R"({"id":"t","page_title":"Clubs","section_title":"","section_text":"","headers":["Club","Ground"],"rows":[["Comets","Riverton"],["Rockets","Lakeford"]]})"
        "\n",
        R"({"id":"p_river","title":"Riverton","text":"Riverton is a town."})"
        "\n"
        R"({"id":"p_comets","title":"Comets","text":"The Comets play football."})"
        "\n",
        "");
    const BlockPool units = make_block_pool(c);
    const InvertedIndex index = build_index(units, {});
    const RetrievalResult r = iter_sparse("football comets", index, units, IterSparseConfig{2, 1, 4096});
    std::vector<std::string> round1;
    for (const auto& t : r.trace) {
        if (t.round == 1) {
            EXPECT_EQ(t.source, "question");
            round1.push_back(t.block_id);
        } else if (t.source == "t#0") {
            EXPECT_EQ(units.at(t.block_id).kind(), BlockKind::Passage);
        } else {
            EXPECT_EQ(t.source, "p_comets");
            EXPECT_EQ(units.at(t.block_id).kind(), BlockKind::Segment);
        }
    }
    EXPECT_EQ(round1, (std::vector<std::string>{"t#0", "p_comets"}));
    EXPECT_EQ(r.trace.size(), 4U);
    expect_ranked_is_trace_sum(r);
}

TEST(IterSparse, BudgetZeroKeepsRankingOnly) {
    const auto& d = directional();
    const RetrievalResult r = iter_sparse(d.fx.questions[0].question, d.index, d.units, IterSparseConfig{20, 5, 0});
    EXPECT_FALSE(r.ranked.empty());
    EXPECT_TRUE(r.truncated_ids.empty());
}

TEST(IterSparseProperty, RankedIsTraceSumAndBounded) {
    const auto& d = directional();
    for (std::size_t i = 0; i < 100; i += 9) {
        const IterSparseConfig cfg{4, 2, 4096};
        const RetrievalResult r = iter_sparse(d.fx.questions[i].question, d.index, d.units, cfg);
        expect_ranked_is_trace_sum(r);
        EXPECT_LE(r.trace.size(), cfg.first_round + cfg.first_round * cfg.per_query);
        std::set<std::string> ids;
        for (const auto& s : r.ranked) ids.insert(s.block_id);
        EXPECT_EQ(ids.size(), r.ranked.size());
    }
}

TEST(DirectionalFixture, SecondStepAndFusionRecoverPassages) {
    const auto& d = directional();
    const double one = hit_rate([&](const std::string& q) { return one_step_sparse(q, d.index, d.units, {}); });
    const double two = hit_rate([&](const std::string& q) { return iter_sparse(q, d.index, d.units, {}); });
    const double fused =
        hit_rate([&](const std::string& q) { return fusion_retrieve(q, d.fused_index, d.fused, d.units, {}); });
    EXPECT_DOUBLE_EQ(one, 0.2);
    EXPECT_DOUBLE_EQ(two, 1.0);
    EXPECT_DOUBLE_EQ(fused, 1.0);
}

TEST(ExpandFused, ScoresInheritedAndSummed) {
    BlockPool fused;
    BlockPool units;
    TableSegment s1;
    s1.id = "s1";
    s1.cells = {"x"};
    s1.header = {"h"};
    s1.extrema_flags = {Extremum::None};
    TableSegment s2 = s1;
    s2.id = "s2";
    const Passage pa{"pA", "A", "Alpha.", {"Alpha."}};
    const Passage pb{"pB", "B", "Beta.", {"Beta."}};
    fused.add(Block(FusedBlock{"s1", s1, {pa, pb}}));
    fused.add(Block(FusedBlock{"s2", s2, {pa}}));
    for (const auto& s : {s1, s2}) units.add(Block(s));
    for (const auto& p : {pa, pb}) units.add(Block(p));

    const RetrievalResult r = expand_fused({{"s1", 2.0}, {"s2", 1.0}}, fused, units, 1000);
    const std::vector<ScoredBlock> expected = {{"pA", 3.0}, {"pB", 2.0}, {"s1", 2.0}, {"s2", 1.0}};
    EXPECT_EQ(r.ranked, expected);
    EXPECT_EQ(r.truncated_ids, (std::vector<std::string>{"pA", "pB", "s1", "s2"}));
    EXPECT_THROW(expand_fused({{"pA", 1.0}}, units, units, 10), Error);
}

TEST(FusionRetrieve, DenseMatchesExpandOfDenseHits) {
    const auto& d = directional();
    const HashedBowEncoder enc(64, 1);
    EmbeddingStore store = embed_pool(d.fused, enc);
    for (std::size_t i = 0; i < 100; i += 13) {
        const Eigen::VectorXd q = enc.encode(d.fx.questions[i].question);
        const RetrievalResult a = fusion_retrieve_dense(q, store, d.fused, d.units, {});
        const RetrievalResult b = expand_fused(dense_top_k(store, q, 15), d.fused, d.units, 4096);
        EXPECT_EQ(a.ranked, b.ranked);
        EXPECT_EQ(a.truncated_ids, b.truncated_ids);
    }
}

TEST(FusionRetrieve, LargeBudgetCoversEverything) {
    const auto& d = directional();
    const RetrievalResult r =
        fusion_retrieve(d.fx.questions[1].question, d.fused_index, d.fused, d.units, FusionConfig{15, 1000000});
    std::vector<std::string> ids;
    for (const auto& s : r.ranked) ids.push_back(s.block_id);
    EXPECT_EQ(r.truncated_ids, ids);
}

TEST(IterDense, SingleStepIsTopHit) {
    const auto& d = directional();
    const HashedBowEncoder enc(64, 2);
    const EmbeddingStore store = embed_pool(d.units, enc);
    const std::string q = d.fx.questions[4].question;
    const RetrievalResult r = iter_dense(q, store, enc, d.units, IterDenseConfig{{1}, 4096});
    ASSERT_EQ(r.ranked.size(), 1U);
    EXPECT_EQ(r.ranked, dense_top_k(store, enc.encode(q), 1));
    EXPECT_THROW(iter_dense(q, store, HashedBowEncoder(32), d.units, {}), DimMismatchError);
}

TEST(IterDenseProperty, BeamCountsAndNoRevisits) {
    const auto& d = directional();
    const HashedBowEncoder enc(64, 3);
    const EmbeddingStore store = embed_pool(d.units, enc);
    for (std::size_t i = 0; i < 100; i += 17) {
        const RetrievalResult r = iter_dense(d.fx.questions[i].question, store, enc, d.units, {});
        EXPECT_LE(r.trace.size(), 8U + 8U * 4U + 8U * 4U * 2U);
        EXPECT_LE(r.ranked.size(), r.trace.size());
        for (const auto& t : r.trace) {
            if (t.round == 1) continue;
            std::stringstream path(t.source);
            std::string id;
            while (std::getline(path, id, '>')) EXPECT_NE(id, t.block_id);
        }
        expect_ranked_is_trace_sum(r);
    }
}

TEST(RetrievalJsonl, RoundTrip) {
    const auto& d = directional();
    std::map<std::string, RetrievalResult> results;
    for (std::size_t i = 0; i < 5; ++i) {
        auto r = iter_sparse(d.fx.questions[i].question, d.index, d.units, {});
        r.trace.clear();
        results[d.fx.questions[i].qid] = r;
    }
    std::stringstream buf;
    write_retrieval_jsonl(buf, results);
    const auto back = load_retrieval_jsonl(buf);
    ASSERT_EQ(back.size(), results.size());
    for (const auto& [qid, r] : results) {
        EXPECT_EQ(back.at(qid).ranked, r.ranked);
        EXPECT_EQ(back.at(qid).truncated_ids, r.truncated_ids);
    }
    std::istringstream dup("{\"qid\":\"a\",\"ranked\":[],\"truncated_ids\":[]}\n{\"qid\":\"a\",\"ranked\":[],\"truncated_ids\":[]}\n");
    EXPECT_THROW(load_retrieval_jsonl(dup), DuplicateIdError);
}

}  // namespace
}  // namespace tabfuse
