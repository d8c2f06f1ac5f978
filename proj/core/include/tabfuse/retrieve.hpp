#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tabfuse/corpus.hpp"
#include "tabfuse/dense.hpp"
#include "tabfuse/index.hpp"

namespace tabfuse {

/// Two-round sparse retrieval: L/2 segments + L/2 passages for the question,
/// then M hits per round-one block for the expanded queries.
struct IterSparseConfig {
    std::size_t first_round = 20;  // L, even
    std::size_t per_query = 5;     // M
    std::size_t budget_tokens = 4096;

    void validate() const;
};

/// Multi-step dense beam; fanouts[j] hits per beam item at step j.
struct IterDenseConfig {
    std::vector<std::size_t> fanouts{8, 4, 2};
    std::size_t budget_tokens = 4096;

    void validate() const;
};

struct FusionConfig {
    std::size_t top_fused = 15;
    std::size_t budget_tokens = 4096;
};

/// Where one score contribution came from.
struct TraceEntry {
    std::size_t round = 0;
    std::string source;  // "question", or the id(s) the query was expanded with
    std::string block_id;
    double score = 0.0;
};

struct RetrievalResult {
    std::vector<ScoredBlock> ranked;         // merged, score desc then id
    std::vector<std::string> truncated_ids;  // longest ranked prefix within budget
    std::vector<TraceEntry> trace;
};

/// Sums per-block scores. Contributions are summed in sorted order so the
/// total does not depend on the order they were added in.
class ScoreAggregator {
public:
    void add(const std::string& block_id, double score);
    std::vector<ScoredBlock> ranked() const;
    std::size_t unique_blocks() const noexcept { return contributions_.size(); }

private:
    std::map<std::string, std::vector<double>> contributions_;
};

/// Whole-block prefix of `ranked` whose summed token counts stay within
/// `budget`; stops at the first block that does not fit.
std::vector<std::string> truncate_to_budget(const std::vector<ScoredBlock>& ranked, const BlockPool& units,
                                            std::size_t budget);

/// Question-only first round (L/2 segments + L/2 passages), merged and truncated.
RetrievalResult one_step_sparse(std::string_view question, const InvertedIndex& index, const BlockPool& pool,
                                const IterSparseConfig& cfg);

RetrievalResult iter_sparse(std::string_view question, const InvertedIndex& index, const BlockPool& pool,
                            const IterSparseConfig& cfg);

/// Beam expansion re-encodes question + " " + the flat text of the beam path.
/// A path never revisits its own blocks.
RetrievalResult iter_dense(std::string_view question, const EmbeddingStore& store, const Encoder& encoder,
                           const BlockPool& pool, const IterDenseConfig& cfg);

/// Splits first-stage fused hits into their segment and passages, each
/// inheriting the fused score, merges duplicates by summing, and truncates.
RetrievalResult expand_fused(const std::vector<ScoredBlock>& fused_hits, const BlockPool& fused_pool,
                             const BlockPool& units, std::size_t budget);

RetrievalResult fusion_retrieve(std::string_view question, const InvertedIndex& fused_index,
                                const BlockPool& fused_pool, const BlockPool& units, const FusionConfig& cfg);

RetrievalResult fusion_retrieve_dense(const Eigen::Ref<const Eigen::VectorXd>& query, const EmbeddingStore& fused_store,
                                      const BlockPool& fused_pool, const BlockPool& units, const FusionConfig& cfg);

/// retrieval_results.jsonl: {"qid","ranked":[{"block_id","score"}],"truncated_ids"}.
void write_retrieval_jsonl(std::ostream& out, const std::map<std::string, RetrievalResult>& results);
std::map<std::string, RetrievalResult> load_retrieval_jsonl(std::istream& in);

}  // namespace tabfuse
