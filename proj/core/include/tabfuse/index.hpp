#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tabfuse/corpus.hpp"
#include "tabfuse/textproc.hpp"

namespace tabfuse {

/// Okapi BM25 free parameters.
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    /// Throws tabfuse::Error unless k1 >= 0 and b in [0, 1].
    void validate() const;
    bool operator==(const Bm25Params&) const = default;
};

struct ScoredBlock {
    std::string block_id;
    double score = 0.0;

    bool operator==(const ScoredBlock&) const = default;
};

/// Document handed to the index builder. Decouples the index from the block
/// representation so title-only indexes can share the code path.
struct IndexDoc {
    std::string id;
    BlockKind kind = BlockKind::Passage;
    std::vector<std::string> tokens;
};

/// Frozen unigram inverted index. Documents are numbered in ascending id
/// order, so comparing document numbers is the id tie-break.
class InvertedIndex {
public:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
        bool operator==(const Posting&) const = default;
    };

    InvertedIndex() = default;

    static InvertedIndex build(std::vector<IndexDoc> docs, const Bm25Params& params,
                               std::size_t threads = 1);

    std::size_t num_docs() const noexcept { return doc_ids_.size(); }
    double avg_doc_len() const noexcept { return avg_doc_len_; }
    const Bm25Params& params() const noexcept { return params_; }

    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    std::optional<std::uint32_t> doc_number(std::string_view id) const;
    std::size_t doc_len(std::string_view id) const;
    BlockKind doc_kind(std::uint32_t doc) const { return doc_kinds_.at(doc); }

    /// Postings sorted by document number; empty for unknown terms.
    const std::vector<Posting>& postings(const std::string& term) const;
    std::size_t doc_frequency(const std::string& term) const { return postings(term).size(); }
    std::size_t vocabulary_size() const noexcept { return postings_.size(); }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
    double idf(std::size_t df) const;

    /// BM25 of `query` against one block. Repeated query terms count once.
    /// Throws UnknownBlockError.
    double score(const TokenSeq& query, std::string_view block_id) const;

    /// Highest-scoring blocks, score descending then id ascending. Blocks with
    /// zero score are never returned.
    std::vector<ScoredBlock> top_k(const TokenSeq& query, std::size_t k,
                                   std::optional<BlockKind> filter = std::nullopt) const;

    /// "FBIDX v1" header line followed by a JSON body.
    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);

private:
    double term_weight(std::uint32_t tf, std::uint32_t doc_len) const;

    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<BlockKind> doc_kinds_;
    std::vector<std::uint32_t> doc_lens_;
    double avg_doc_len_ = 0.0;
    std::unordered_map<std::string, std::uint32_t> doc_numbers_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

inline constexpr std::string_view kIndexSnapshotHeader = "FBIDX v1";

/// Indexes the flattened form of every block.
InvertedIndex build_index(const BlockPool& pool, const Bm25Params& params, std::size_t threads = 1);
InvertedIndex build_index(const std::vector<Block>& blocks, const Bm25Params& params,
                          std::size_t threads = 1);

/// Passage-title-only index used by the entity linker.
InvertedIndex build_title_index(const std::vector<Passage>& passages, const Bm25Params& params,
                                std::size_t threads = 1);

double bm25_score(const InvertedIndex& index, const TokenSeq& query, std::string_view block_id);

std::vector<ScoredBlock> top_k(const InvertedIndex& index, const TokenSeq& query, std::size_t k,
                               std::optional<BlockKind> filter = std::nullopt);

/// Score descending, then block id ascending.
bool ranks_before(const ScoredBlock& a, const ScoredBlock& b) noexcept;

}  // namespace tabfuse
