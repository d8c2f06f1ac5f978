#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tabfuse/attention.hpp"
#include "tabfuse/corpus.hpp"
#include "tabfuse/index.hpp"

namespace tabfuse {

/// A retrieved block as the reader sees it.
struct ReaderBlock {
    std::string block_id;
    double retrieval_score = 0.0;
    std::vector<std::string> tokens;
};

struct ScoredSpan {
    std::size_t begin = 0;  // token range [begin, end) in the target block
    std::size_t end = 0;
    double score = 0.0;     // f_read in [0, 1]
};

/// Scores candidate answer spans of one block while reading a context of
/// blocks (the block alone, or the whole concatenation).
class SpanScorer {
public:
    virtual ~SpanScorer() = default;
    virtual std::vector<ScoredSpan> score_spans(const std::vector<std::string>& question,
                                                std::span<const ReaderBlock> context,
                                                std::size_t target) const = 0;
};

/// Built-in lexical reader. A span's evidence is the +-window tokens around it
/// in the concatenated context, so neighboring blocks contribute when the
/// context holds more than the target block. f_read is the idf mass of
/// question terms found in the evidence over the question's total idf mass.
class LexicalSpanScorer final : public SpanScorer {
public:
    /// idf is estimated over `collection` (block document frequency).
    explicit LexicalSpanScorer(std::span<const ReaderBlock> collection, std::size_t max_span_len = 10,
                               std::size_t window = 20);

    std::vector<ScoredSpan> score_spans(const std::vector<std::string>& question, std::span<const ReaderBlock> context,
                                        std::size_t target) const override;

    double idf(const std::string& term) const;

private:
    std::size_t max_span_len_;
    std::size_t window_;
    std::size_t num_blocks_;
    std::unordered_map<std::string, std::size_t> df_;
};

enum class RetrievalNormalization { MinMax, None };

struct ReaderAnswer {
    std::string answer;
    std::string block_id;
    double confidence = 0.0;
};

/// Retrieval scores rescaled to [0, 1] over the list; all 1.0 when constant.
std::vector<double> min_max_normalize(std::span<const double> scores);

/// Reads each block on its own and returns the span maximizing
/// retrieval_confidence * f_read. Throws EmptyRankingError.
ReaderAnswer select_span_single_block(const std::vector<std::string>& question, std::span<const ReaderBlock> ranked,
                                      const SpanScorer& scorer,
                                      RetrievalNormalization norm = RetrievalNormalization::MinMax);

/// Reads the concatenation of all blocks at once and returns the single best
/// span by f_read. Spans never cross block boundaries. Throws
/// BudgetExceededError when the blocks exceed cfg.seq_len tokens.
ReaderAnswer select_span_cross_block(const std::vector<std::string>& question, std::span<const ReaderBlock> blocks,
                                     const SparseAttentionConfig& cfg, const SpanScorer& scorer);

/// Reader inputs for retrieved ids, in the given order.
std::vector<ReaderBlock> reader_blocks(const std::vector<ScoredBlock>& ranked, const std::vector<std::string>& ids,
                                       const BlockPool& units);

}  // namespace tabfuse
