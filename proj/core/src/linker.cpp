#include "tabfuse/linker.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include "jsonl.hpp"
#include "tabfuse/errors.hpp"

namespace tabfuse {

using detail::json;

std::vector<std::string> LinkResult::passage_ids() const {
    std::vector<std::string> ids;
    ids.reserve(linked.size());
    for (const auto& l : linked) ids.push_back(l.passage_id);
    return ids;
}

std::vector<std::string> baseline_queries(const TableSegment& segment) {
    std::vector<std::string> queries;
    for (const auto& cell : segment.cells) {
        if (split_whitespace(cell).empty()) continue;
        queries.push_back(cell);
    }
    return queries;
}

AugmentedQueries load_augmented_queries(std::istream& in,
                                        const std::unordered_set<std::string>& known_segments) {
    AugmentedQueries out;
    detail::for_each_json_line(in, [&](const json& obj, std::size_t line) {
        std::string sid = detail::require_string(obj, "segment_id", line);
        if (!known_segments.contains(sid)) throw UnknownSegmentError(sid);
        auto queries = detail::require_string_array(obj, "queries", line);
        auto& dst = out[sid];
        dst.insert(dst.end(), queries.begin(), queries.end());
    });
    return out;
}

AugmentedQueries load_augmented_queries(const std::filesystem::path& path,
                                        const std::unordered_set<std::string>& known_segments) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return load_augmented_queries(in, known_segments);
}

LinkResult link_segment(const TableSegment& segment, const std::vector<std::string>& queries,
                        const InvertedIndex& title_index, std::size_t per_query_k, double threshold) {
    std::unordered_map<std::string, double> best;
    if (per_query_k == 0) per_query_k = 1;
    for (const auto& q : queries) {
        for (auto& hit : title_index.top_k(tokenize(q), per_query_k, BlockKind::Passage)) {
            if (!(hit.score >= threshold)) continue;
            auto [it, inserted] = best.emplace(hit.block_id, hit.score);
            if (!inserted) it->second = std::max(it->second, hit.score);
        }
    }
    LinkResult result;
    result.segment_id = segment.id;
    result.linked.reserve(best.size());
    for (auto& [id, score] : best) result.linked.push_back({id, score});
    std::sort(result.linked.begin(), result.linked.end(), [](const LinkedPassage& a, const LinkedPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    return result;
}

SegmentLinkScore score_link_sets(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
    const std::set<std::string> p(predicted.begin(), predicted.end());
    const std::set<std::string> g(gold.begin(), gold.end());
    std::size_t hit = 0;
    for (const auto& id : p) hit += g.count(id);

    SegmentLinkScore s;
    if (p.empty()) s.precision = g.empty() ? 1.0 : 0.0;
    else s.precision = static_cast<double>(hit) / static_cast<double>(p.size());
    s.recall = g.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(g.size());
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

LinkEvalReport eval_linking(const std::map<std::string, LinkResult>& predictions, const GoldLinks& gold) {
    LinkEvalReport report;
    for (const auto& [sid, gold_ids] : gold) {
        auto it = predictions.find(sid);
        const std::vector<std::string> predicted = it == predictions.end() ? std::vector<std::string>{}
                                                                           : it->second.passage_ids();
        SegmentLinkScore s = score_link_sets(predicted, gold_ids);
        s.segment_id = sid;
        report.macro_precision += s.precision;
        report.macro_recall += s.recall;
        report.macro_f1 += s.f1;
        report.per_segment.push_back(std::move(s));
    }
    if (!report.per_segment.empty()) {
        const auto n = static_cast<double>(report.per_segment.size());
        report.macro_precision /= n;
        report.macro_recall /= n;
        report.macro_f1 /= n;
    }
    return report;
}

void write_link_results_jsonl(std::ostream& out, const std::map<std::string, LinkResult>& results) {
    for (const auto& [sid, r] : results) {
        json scores = json::array();
        for (const auto& l : r.linked) scores.push_back(l.score);
        json obj = {{"segment_id", sid}, {"passage_ids", r.passage_ids()}, {"scores", std::move(scores)}};
        out << obj.dump() << '\n';
    }
}

}  // namespace tabfuse
