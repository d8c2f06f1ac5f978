#include "tabfuse/retrieve.hpp"

#include <algorithm>
#include <numeric>

#include "jsonl.hpp"
#include "tabfuse/errors.hpp"

namespace tabfuse {

using detail::json;

void IterSparseConfig::validate() const {
    if (first_round < 2 || first_round % 2 != 0) throw Error("L must be an even integer >= 2");
    if (per_query < 1) throw Error("M must be >= 1");
}

void IterDenseConfig::validate() const {
    if (fanouts.empty()) throw Error("iterative dense retrieval needs at least one step");
    for (auto f : fanouts) {
        if (f < 1) throw Error("every fanout must be >= 1");
    }
}

void ScoreAggregator::add(const std::string& block_id, double score) {
    contributions_[block_id].push_back(score);
}

std::vector<ScoredBlock> ScoreAggregator::ranked() const {
    std::vector<ScoredBlock> out;
    out.reserve(contributions_.size());
    for (const auto& [id, parts] : contributions_) {
        std::vector<double> sorted = parts;
        std::sort(sorted.begin(), sorted.end());
        out.push_back({id, std::accumulate(sorted.begin(), sorted.end(), 0.0)});
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

std::vector<std::string> truncate_to_budget(const std::vector<ScoredBlock>& ranked, const BlockPool& units,
                                            std::size_t budget) {
    std::vector<std::string> ids;
    std::size_t used = 0;
    for (const auto& s : ranked) {
        const std::size_t len = units.at(s.block_id).token_count();
        if (used + len > budget) break;
        used += len;
        ids.push_back(s.block_id);
    }
    return ids;
}

namespace {

void record(RetrievalResult& result, ScoreAggregator& agg, std::size_t round, const std::string& source,
            const std::vector<ScoredBlock>& hits) {
    for (const auto& h : hits) {
        agg.add(h.block_id, h.score);
        result.trace.push_back({round, source, h.block_id, h.score});
    }
}

void finish(RetrievalResult& result, const ScoreAggregator& agg, const BlockPool& units, std::size_t budget) {
    result.ranked = agg.ranked();
    result.truncated_ids = truncate_to_budget(result.ranked, units, budget);
}

TokenSeq concat(TokenSeq a, const TokenSeq& b) {
    a.tokens.insert(a.tokens.end(), b.tokens.begin(), b.tokens.end());
    a.offsets.insert(a.offsets.end(), b.offsets.begin(), b.offsets.end());
    return a;
}

struct FirstRound {
    std::vector<ScoredBlock> segments;
    std::vector<ScoredBlock> passages;
};

FirstRound first_round(const TokenSeq& q, const InvertedIndex& index, const IterSparseConfig& cfg) {
    const std::size_t half = cfg.first_round / 2;
    return {index.top_k(q, half, BlockKind::Segment), index.top_k(q, half, BlockKind::Passage)};
}

}  // namespace

RetrievalResult one_step_sparse(std::string_view question, const InvertedIndex& index, const BlockPool& pool,
                                const IterSparseConfig& cfg) {
    cfg.validate();
    const TokenSeq q = tokenize(question);
    RetrievalResult result;
    ScoreAggregator agg;
    const FirstRound r1 = first_round(q, index, cfg);
    record(result, agg, 1, "question", r1.segments);
    record(result, agg, 1, "question", r1.passages);
    finish(result, agg, pool, cfg.budget_tokens);
    return result;
}

RetrievalResult iter_sparse(std::string_view question, const InvertedIndex& index, const BlockPool& pool,
                            const IterSparseConfig& cfg) {
    cfg.validate();
    const TokenSeq q = tokenize(question);
    RetrievalResult result;
    ScoreAggregator agg;

    const FirstRound r1 = first_round(q, index, cfg);
    record(result, agg, 1, "question", r1.segments);
    record(result, agg, 1, "question", r1.passages);

    // [q ; segment] -> passages, [q ; passage title] -> segments
    for (const auto& hit : r1.segments) {
        const Block& b = pool.at(hit.block_id);
        const TokenSeq expanded = concat(q, b.flat().seq);
        record(result, agg, 2, hit.block_id, index.top_k(expanded, cfg.per_query, BlockKind::Passage));
    }
    for (const auto& hit : r1.passages) {
        const Block& b = pool.at(hit.block_id);
        const Passage* p = b.passage();
        const TokenSeq expanded = concat(q, tokenize(p != nullptr ? p->title : b.flat().text));
        record(result, agg, 2, hit.block_id, index.top_k(expanded, cfg.per_query, BlockKind::Segment));
    }

    finish(result, agg, pool, cfg.budget_tokens);
    return result;
}

RetrievalResult iter_dense(std::string_view question, const EmbeddingStore& store, const Encoder& encoder,
                           const BlockPool& pool, const IterDenseConfig& cfg) {
    cfg.validate();
    if (encoder.dim() != store.dim()) throw DimMismatchError(store.dim(), encoder.dim());

    RetrievalResult result;
    ScoreAggregator agg;
    struct Path {
        std::vector<std::string> ids;
        std::string text;  // flat text of the path, space-joined
    };

    std::vector<Path> beam;
    {
        const auto hits = dense_top_k(store, encoder.encode(question), cfg.fanouts[0]);
        record(result, agg, 1, "question", hits);
        for (const auto& h : hits) beam.push_back({{h.block_id}, pool.at(h.block_id).flat().text});
    }

    for (std::size_t step = 1; step < cfg.fanouts.size(); ++step) {
        const std::size_t fanout = cfg.fanouts[step];
        std::vector<Path> next;
        for (const auto& path : beam) {
            const std::string text = std::string(question) + " " + path.text;
            auto hits = dense_top_k(store, encoder.encode(text), fanout + path.ids.size());
            std::erase_if(hits, [&](const ScoredBlock& h) {
                return std::find(path.ids.begin(), path.ids.end(), h.block_id) != path.ids.end();
            });
            if (hits.size() > fanout) hits.resize(fanout);

            std::string source;
            for (const auto& id : path.ids) source += (source.empty() ? "" : ">") + id;
            record(result, agg, step + 1, source, hits);
            for (const auto& h : hits) {
                Path extended = path;
                extended.ids.push_back(h.block_id);
                extended.text += " " + pool.at(h.block_id).flat().text;
                next.push_back(std::move(extended));
            }
        }
        beam = std::move(next);
    }

    finish(result, agg, pool, cfg.budget_tokens);
    return result;
}

RetrievalResult expand_fused(const std::vector<ScoredBlock>& fused_hits, const BlockPool& fused_pool,
                             const BlockPool& units, std::size_t budget) {
    RetrievalResult result;
    ScoreAggregator agg;
    for (const auto& hit : fused_hits) {
        const FusedBlock* f = fused_pool.at(hit.block_id).fused();
        if (f == nullptr) throw Error("block " + hit.block_id + " is not a fused block");
        std::vector<ScoredBlock> parts{{f->segment.id, hit.score}};
        for (const auto& p : f->passages) parts.push_back({p.id, hit.score});
        record(result, agg, 1, hit.block_id, parts);
    }
    finish(result, agg, units, budget);
    return result;
}

RetrievalResult fusion_retrieve(std::string_view question, const InvertedIndex& fused_index,
                                const BlockPool& fused_pool, const BlockPool& units, const FusionConfig& cfg) {
    const auto hits = fused_index.top_k(tokenize(question), cfg.top_fused, BlockKind::Fused);
    return expand_fused(hits, fused_pool, units, cfg.budget_tokens);
}

RetrievalResult fusion_retrieve_dense(const Eigen::Ref<const Eigen::VectorXd>& query, const EmbeddingStore& fused_store,
                                      const BlockPool& fused_pool, const BlockPool& units, const FusionConfig& cfg) {
    const auto hits = dense_top_k(fused_store, query, cfg.top_fused);
    return expand_fused(hits, fused_pool, units, cfg.budget_tokens);
}

void write_retrieval_jsonl(std::ostream& out, const std::map<std::string, RetrievalResult>& results) {
    for (const auto& [qid, r] : results) {
        json ranked = json::array();
        for (const auto& s : r.ranked) ranked.push_back({{"block_id", s.block_id}, {"score", s.score}});
        json obj = {{"qid", qid}, {"ranked", std::move(ranked)}, {"truncated_ids", r.truncated_ids}};
        out << obj.dump() << '\n';
    }
}

std::map<std::string, RetrievalResult> load_retrieval_jsonl(std::istream& in) {
    std::map<std::string, RetrievalResult> out;
    detail::for_each_json_line(in, [&](const json& obj, std::size_t line) {
        std::string qid = detail::require_string(obj, "qid", line);
        RetrievalResult r;
        auto it = obj.find("ranked");
        if (it == obj.end() || !it->is_array()) throw ParseError(line, "missing array \"ranked\"");
        for (const auto& e : *it) {
            if (!e.is_object() || !e.contains("block_id") || !e.contains("score") || !e["block_id"].is_string() ||
                !e["score"].is_number()) {
                throw ParseError(line, "ranked entries need block_id and score");
            }
            r.ranked.push_back({e["block_id"].get<std::string>(), e["score"].get<double>()});
        }
        r.truncated_ids = detail::require_string_array(obj, "truncated_ids", line);
        if (!out.emplace(qid, std::move(r)).second) throw DuplicateIdError(qid);
    });
    return out;
}

}  // namespace tabfuse
