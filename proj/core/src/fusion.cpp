#include "tabfuse/fusion.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>

#include "jsonl.hpp"
#include "tabfuse/errors.hpp"
#include "tabfuse/parallel.hpp"

namespace tabfuse {

using detail::json;

namespace {

// Unbiased draw from [0, n) by rejection; independent of the standard
// library's distribution implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

void append_words(std::vector<std::string>& out, std::string_view text) {
    for (auto& w : split_whitespace(text)) out.push_back(std::move(w));
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (w.empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

}  // namespace

std::vector<FusedBlock> build_fused_pool(const std::vector<TableSegment>& segments,
                                         const std::vector<Passage>& passages, const GoldLinks& links) {
    std::unordered_map<std::string_view, const Passage*> by_id;
    for (const auto& p : passages) by_id.emplace(p.id, &p);

    std::vector<FusedBlock> pool;
    pool.reserve(segments.size());
    for (const auto& s : segments) {
        FusedBlock f;
        f.id = s.id;
        f.segment = s;
        if (auto it = links.find(s.id); it != links.end()) {
            for (const auto& pid : it->second) {
                auto p = by_id.find(pid);
                if (p == by_id.end()) throw DanglingLinkError(s.id, pid);
                const bool seen = std::any_of(f.passages.begin(), f.passages.end(),
                                              [&](const Passage& q) { return q.id == pid; });
                if (!seen) f.passages.push_back(*p->second);
            }
        }
        pool.push_back(std::move(f));
    }
    return pool;
}

std::vector<FusedBlock> build_fused_pool(const std::vector<TableSegment>& segments,
                                         const std::vector<Passage>& passages,
                                         const std::map<std::string, LinkResult>& links) {
    GoldLinks as_links;
    for (const auto& [sid, r] : links) as_links[sid] = r.passage_ids();
    return build_fused_pool(segments, passages, as_links);
}

BlockPool make_fused_block_pool(const std::vector<FusedBlock>& fused) {
    BlockPool pool;
    for (const auto& f : fused) pool.add(Block(f));
    return pool;
}

void write_fused_jsonl(std::ostream& out, const std::vector<FusedBlock>& fused) {
    for (const auto& f : fused) {
        std::vector<std::string> pids;
        for (const auto& p : f.passages) pids.push_back(p.id);
        json obj = {{"id", f.id}, {"segment_id", f.segment.id}, {"passage_ids", pids}};
        out << obj.dump() << '\n';
    }
}

std::vector<FusedBlock> load_fused_jsonl(std::istream& in, const Corpus& corpus) {
    std::unordered_map<std::string_view, const TableSegment*> segments;
    for (const auto& s : corpus.segments) segments.emplace(s.id, &s);
    std::unordered_map<std::string_view, const Passage*> passages;
    for (const auto& p : corpus.passages) passages.emplace(p.id, &p);

    std::vector<FusedBlock> out;
    std::unordered_map<std::string, bool> seen;
    detail::for_each_json_line(in, [&](const json& obj, std::size_t line) {
        FusedBlock f;
        f.id = detail::require_string(obj, "id", line);
        const std::string sid = detail::require_string(obj, "segment_id", line);
        auto s = segments.find(sid);
        if (s == segments.end()) throw UnknownSegmentError(sid);
        if (!seen.emplace(f.id, true).second) throw DuplicateIdError(f.id);
        f.segment = *s->second;
        for (const auto& pid : detail::require_string_array(obj, "passage_ids", line)) {
            auto p = passages.find(pid);
            if (p == passages.end()) throw DanglingLinkError(sid, pid);
            f.passages.push_back(*p->second);
        }
        out.push_back(std::move(f));
    });
    return out;
}

std::vector<std::string> ict_droppable_words(const TableSegment& segment) {
    std::vector<std::string> words;
    append_words(words, segment.metadata.page_title);
    append_words(words, segment.metadata.section_title);
    append_words(words, segment.metadata.section_text);
    for (const auto& cell : segment.cells) append_words(words, cell);
    return words;
}

IctPair make_ict_pair(const FusedBlock& block, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const TableSegment& s = block.segment;

    // Droppable positions: metadata words, then each cell's words. Headers are
    // carried through untouched in front of their column's cell words.
    std::vector<std::string> meta;
    append_words(meta, s.metadata.page_title);
    append_words(meta, s.metadata.section_title);
    append_words(meta, s.metadata.section_text);
    std::vector<std::vector<std::string>> cell_words(s.cells.size());
    for (std::size_t c = 0; c < s.cells.size(); ++c) append_words(cell_words[c], s.cells[c]);
    std::size_t w = meta.size();
    for (const auto& cw : cell_words) w += cw.size();

    // Partial Fisher-Yates: the first floor(w/2) slots are the dropped positions.
    std::vector<std::size_t> order(w);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t drop = w / 2;
    for (std::size_t i = 0; i < drop; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, w - i));
        std::swap(order[i], order[j]);
    }
    std::vector<bool> dropped(w, false);
    for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = true;

    IctPair pair;
    pair.target_block_id = block.id;
    pair.seed = seed;
    std::vector<std::string> query;
    std::size_t pos = 0;
    auto keep_words = [&](const std::vector<std::string>& words) {
        for (const auto& word : words) {
            if (!dropped[pos]) {
                query.push_back(word);
                pair.kept_positions.push_back(pos);
            }
            ++pos;
        }
    };
    keep_words(meta);
    for (std::size_t c = 0; c < cell_words.size(); ++c) {
        if (c < s.header.size()) append_words(query, s.header[c]);
        keep_words(cell_words[c]);
    }

    if (block.passages.empty()) {
        pair.segment_only = true;
    } else {
        const Passage& p = block.passages[uniform_below(rng, block.passages.size())];
        pair.sentence = p.sentences[uniform_below(rng, p.sentences.size())];
        query.push_back(pair.sentence);
    }
    pair.pseudo_query = join_words(query);
    return pair;
}

std::vector<IctPair> generate_ict_dataset(const std::vector<FusedBlock>& pool, std::size_t pairs_per_block,
                                          std::uint64_t base_seed, std::size_t threads) {
    if (pairs_per_block == 0) throw Error("pairs_per_block must be >= 1");
    std::vector<const FusedBlock*> ordered;
    ordered.reserve(pool.size());
    for (const auto& f : pool) ordered.push_back(&f);
    std::sort(ordered.begin(), ordered.end(), [](const FusedBlock* a, const FusedBlock* b) { return a->id < b->id; });

    std::vector<IctPair> pairs(ordered.size() * pairs_per_block);
    parallel_for(ordered.size(), threads, [&](std::size_t r) {
        for (std::size_t j = 0; j < pairs_per_block; ++j) {
            const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r * pairs_per_block + j);
            pairs[r * pairs_per_block + j] = make_ict_pair(*ordered[r], seed);
        }
    });
    return pairs;
}

void write_ict_jsonl(std::ostream& out, const std::vector<IctPair>& pairs) {
    for (const auto& p : pairs) {
        json obj = {{"pseudo_query", p.pseudo_query},
                    {"target_block_id", p.target_block_id},
                    {"seed", p.seed},
                    {"rng", std::string(kIctRngName)},
                    {"segment_only", p.segment_only}};
        out << obj.dump() << '\n';
    }
}

}  // namespace tabfuse
