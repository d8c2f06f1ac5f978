#include "tabfuse/reader.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tabfuse/errors.hpp"

namespace tabfuse {

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> kWords = {
        "a",    "an",   "the",  "of",   "in",   "on",   "at",   "to",   "for",  "by",    "with", "from",
        "and",  "or",   "is",   "was",  "are",  "were", "be",   "been", "as",   "that",  "this", "it",
        "its",  "his",  "her",  "their", "he",  "she",  "they", "who",  "whom", "which", "what", "when",
        "where", "why", "how",  "did",  "does", "do",   "has",  "have", "had",  "not",   "but",  "into"};
    return kWords;
}

bool is_boundary_ok(const std::string& token, const std::unordered_set<std::string>& question) {
    return !markers::is_marker(token) && !stopwords().contains(token) && !question.contains(token);
}

struct Better {
    bool operator()(const ScoredSpan& a, const ScoredSpan& b) const {
        if (a.score != b.score) return a.score > b.score;
        const std::size_t la = a.end - a.begin;
        const std::size_t lb = b.end - b.begin;
        if (la != lb) return la < lb;
        return a.begin < b.begin;
    }
};

std::optional<ScoredSpan> best_span(const std::vector<ScoredSpan>& spans) {
    if (spans.empty()) return std::nullopt;
    return *std::min_element(spans.begin(), spans.end(), Better{});
}

}  // namespace

LexicalSpanScorer::LexicalSpanScorer(std::span<const ReaderBlock> collection, std::size_t max_span_len,
                                     std::size_t window)
    : max_span_len_(std::max<std::size_t>(max_span_len, 1)), window_(window), num_blocks_(collection.size()) {
    for (const auto& b : collection) {
        std::unordered_set<std::string> seen(b.tokens.begin(), b.tokens.end());
        for (const auto& t : seen) ++df_[t];
    }
}

double LexicalSpanScorer::idf(const std::string& term) const {
    auto it = df_.find(term);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    const auto n = static_cast<double>(num_blocks_);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredSpan> LexicalSpanScorer::score_spans(const std::vector<std::string>& question,
                                                       std::span<const ReaderBlock> context,
                                                       std::size_t target) const {
    if (target >= context.size()) throw Error("reader target block out of range");

    // Unique question terms and their idf mass.
    std::vector<std::string> terms = question;
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    std::erase_if(terms, [](const std::string& t) { return markers::is_marker(t); });
    const std::unordered_set<std::string> qset(terms.begin(), terms.end());
    std::unordered_map<std::string, std::size_t> term_index;
    std::vector<double> term_idf;
    double mass = 0.0;
    for (const auto& t : terms) {
        term_index.emplace(t, term_idf.size());
        term_idf.push_back(idf(t));
        mass += term_idf.back();
    }

    // Question-term id at each position of the concatenated context, or -1.
    std::vector<int> qpos;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < context.size(); ++b) {
        if (b == target) offset = qpos.size();
        for (const auto& t : context[b].tokens) {
            auto it = term_index.find(t);
            qpos.push_back(it == term_index.end() ? -1 : static_cast<int>(it->second));
        }
    }

    const auto& tgt = context[target].tokens;
    std::vector<ScoredSpan> out;
    std::vector<char> matched(terms.size());
    for (std::size_t begin = 0; begin < tgt.size(); ++begin) {
        if (!is_boundary_ok(tgt[begin], qset)) continue;
        for (std::size_t len = 1; len <= max_span_len_ && begin + len <= tgt.size(); ++len) {
            const std::size_t end = begin + len;
            if (markers::is_marker(tgt[end - 1])) break;
            if (!is_boundary_ok(tgt[end - 1], qset)) continue;

            const std::size_t g_begin = offset + begin;
            const std::size_t g_end = offset + end;
            const std::size_t lo = g_begin - std::min(window_, g_begin);
            const std::size_t hi = std::min(qpos.size(), g_end + window_);
            std::fill(matched.begin(), matched.end(), 0);
            for (std::size_t i = lo; i < hi; ++i) {
                if (i >= g_begin && i < g_end) continue;
                if (qpos[i] >= 0) matched[static_cast<std::size_t>(qpos[i])] = 1;
            }
            double found = 0.0;
            for (std::size_t t = 0; t < terms.size(); ++t) {
                if (matched[t] != 0) found += term_idf[t];
            }
            out.push_back({begin, end, mass > 0.0 ? found / mass : 0.0});
        }
    }
    return out;
}

std::vector<double> min_max_normalize(std::span<const double> scores) {
    std::vector<double> out(scores.begin(), scores.end());
    if (out.empty()) return out;
    const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
    const double min = *lo;
    const double range = *hi - *lo;
    for (auto& s : out) s = range > 0.0 ? (s - min) / range : 1.0;
    return out;
}

ReaderAnswer select_span_single_block(const std::vector<std::string>& question, std::span<const ReaderBlock> ranked,
                                      const SpanScorer& scorer, RetrievalNormalization norm) {
    if (ranked.empty()) throw EmptyRankingError();
    std::vector<double> retrieval;
    retrieval.reserve(ranked.size());
    for (const auto& b : ranked) retrieval.push_back(b.retrieval_score);
    if (norm == RetrievalNormalization::MinMax) retrieval = min_max_normalize(retrieval);

    ReaderAnswer best;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        auto span = best_span(scorer.score_spans(question, ranked.subspan(i, 1), 0));
        if (!span) continue;
        const double confidence = retrieval[i] * span->score;
        if (confidence > best.confidence) {
            best = {join_tokens(ranked[i].tokens, span->begin, span->end), ranked[i].block_id, confidence};
        }
    }
    return best;
}

ReaderAnswer select_span_cross_block(const std::vector<std::string>& question, std::span<const ReaderBlock> blocks,
                                     const SparseAttentionConfig& cfg, const SpanScorer& scorer) {
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.tokens.size();
    if (total > cfg.seq_len) throw BudgetExceededError(total, cfg.seq_len);

    ReaderAnswer best;
    std::optional<ScoredSpan> best_span_so_far;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto span = best_span(scorer.score_spans(question, blocks, i));
        if (!span || !(span->score > 0.0)) continue;
        if (!best_span_so_far || span->score > best_span_so_far->score) {
            best_span_so_far = span;
            best = {join_tokens(blocks[i].tokens, span->begin, span->end), blocks[i].block_id, span->score};
        }
    }
    return best;
}

std::vector<ReaderBlock> reader_blocks(const std::vector<ScoredBlock>& ranked, const std::vector<std::string>& ids,
                                       const BlockPool& units) {
    std::unordered_map<std::string, double> scores;
    for (const auto& s : ranked) scores.emplace(s.block_id, s.score);
    std::vector<ReaderBlock> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = scores.find(id);
        out.push_back({id, it == scores.end() ? 0.0 : it->second, units.at(id).flat().seq.tokens});
    }
    return out;
}

}  // namespace tabfuse
