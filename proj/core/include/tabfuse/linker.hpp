#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "tabfuse/corpus.hpp"
#include "tabfuse/index.hpp"

namespace tabfuse {

/// segment id -> generated queries q_1..q_n, in generation order.
using AugmentedQueries = std::map<std::string, std::vector<std::string>>;

struct LinkedPassage {
    std::string passage_id;
    double score = 0.0;
    bool operator==(const LinkedPassage&) const = default;
};

struct LinkResult {
    std::string segment_id;
    std::vector<LinkedPassage> linked;  // score desc, then id

    std::vector<std::string> passage_ids() const;
    bool operator==(const LinkResult&) const = default;
};

struct LinkOptions {
    std::size_t per_query_k = 1;
    double threshold = 0.0;
};

struct SegmentLinkScore {
    std::string segment_id;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct LinkEvalReport {
    std::vector<SegmentLinkScore> per_segment;  // ordered by segment id
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

/// One query per non-empty cell: the raw cell string, in column order.
std::vector<std::string> baseline_queries(const TableSegment& segment);

/// Reads augmented_queries.jsonl. Every segment id must be in `known_segments`.
AugmentedQueries load_augmented_queries(std::istream& in,
                                        const std::unordered_set<std::string>& known_segments);
AugmentedQueries load_augmented_queries(const std::filesystem::path& path,
                                        const std::unordered_set<std::string>& known_segments);

/// Runs each query against a passage-title index and unions the hits, keeping
/// each passage's best score. Result does not depend on query order.
LinkResult link_segment(const TableSegment& segment, const std::vector<std::string>& queries,
                        const InvertedIndex& title_index, std::size_t per_query_k = 1,
                        double threshold = 0.0);

/// Per-segment precision/recall/F1 over every segment that has a gold entry,
/// macro-averaged. Segments absent from `predictions` count as empty.
LinkEvalReport eval_linking(const std::map<std::string, LinkResult>& predictions, const GoldLinks& gold);

/// Precision/recall/F1 of one predicted set against one gold set.
SegmentLinkScore score_link_sets(const std::vector<std::string>& predicted,
                                 const std::vector<std::string>& gold);

/// links.jsonl-compatible lines with an extra "scores" array.
void write_link_results_jsonl(std::ostream& out, const std::map<std::string, LinkResult>& results);

}  // namespace tabfuse
