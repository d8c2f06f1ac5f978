#include "tabfuse/index.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "json.hpp"
#include "tabfuse/errors.hpp"
#include "tabfuse/parallel.hpp"

namespace tabfuse {

using json = nlohmann::json;

void Bm25Params::validate() const {
    if (!(k1 >= 0.0) || !std::isfinite(k1)) throw Error("bm25 k1 must be a finite value >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw Error("bm25 b must lie in [0, 1]");
}

bool ranks_before(const ScoredBlock& a, const ScoredBlock& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return a.block_id < b.block_id;
}

InvertedIndex InvertedIndex::build(std::vector<IndexDoc> docs, const Bm25Params& params,
                                   std::size_t threads) {
    params.validate();
    std::sort(docs.begin(), docs.end(), [](const IndexDoc& a, const IndexDoc& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < docs.size(); ++i) {
        if (docs[i].id == docs[i - 1].id) throw DuplicateIdError(docs[i].id);
    }

    InvertedIndex idx;
    idx.params_ = params;
    const std::size_t n = docs.size();
    idx.doc_ids_.reserve(n);
    idx.doc_kinds_.reserve(n);
    idx.doc_lens_.reserve(n);
    std::uint64_t total_len = 0;
    for (std::size_t i = 0; i < n; ++i) {
        idx.doc_numbers_.emplace(docs[i].id, static_cast<std::uint32_t>(i));
        idx.doc_ids_.push_back(docs[i].id);
        idx.doc_kinds_.push_back(docs[i].kind);
        idx.doc_lens_.push_back(static_cast<std::uint32_t>(docs[i].tokens.size()));
        total_len += docs[i].tokens.size();
    }
    idx.avg_doc_len_ = n == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(n);

    // Each chunk inverts a contiguous, ascending doc range; concatenating the
    // chunks in order keeps every posting list sorted by doc number.
    const std::size_t chunks = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    const std::size_t chunk_size = (n + chunks - 1) / std::max<std::size_t>(chunks, 1);
    std::vector<std::unordered_map<std::string, std::vector<Posting>>> partial(chunks);
    parallel_for(chunks, chunks, [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(n, begin + chunk_size);
        auto& local = partial[c];
        std::map<std::string_view, std::uint32_t> counts;
        for (std::size_t d = begin; d < end; ++d) {
            counts.clear();
            for (const auto& t : docs[d].tokens) ++counts[t];
            for (const auto& [term, tf] : counts) {
                local[std::string(term)].push_back({static_cast<std::uint32_t>(d), tf});
            }
        }
    });
    for (auto& local : partial) {
        for (auto& [term, list] : local) {
            auto& dst = idx.postings_[term];
            dst.insert(dst.end(), list.begin(), list.end());
        }
    }
    return idx;
}

std::optional<std::uint32_t> InvertedIndex::doc_number(std::string_view id) const {
    auto it = doc_numbers_.find(std::string(id));
    if (it == doc_numbers_.end()) return std::nullopt;
    return it->second;
}

std::size_t InvertedIndex::doc_len(std::string_view id) const {
    auto doc = doc_number(id);
    if (!doc) throw UnknownBlockError(std::string(id));
    return doc_lens_[*doc];
}

const std::vector<InvertedIndex::Posting>& InvertedIndex::postings(const std::string& term) const {
    static const std::vector<Posting> kEmpty;
    auto it = postings_.find(term);
    return it == postings_.end() ? kEmpty : it->second;
}

double InvertedIndex::idf(std::size_t df) const {
    const auto N = static_cast<double>(num_docs());
    const auto d = static_cast<double>(df);
    return std::log(1.0 + (N - d + 0.5) / (d + 0.5));
}

double InvertedIndex::term_weight(std::uint32_t tf, std::uint32_t doc_len) const {
    const double f = tf;
    const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len) / avg_doc_len_;
    return f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

namespace {
std::vector<std::string> unique_terms(const TokenSeq& query) {
    std::vector<std::string> terms = query.tokens;
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}
}  // namespace

double InvertedIndex::score(const TokenSeq& query, std::string_view block_id) const {
    auto doc = doc_number(block_id);
    if (!doc) throw UnknownBlockError(std::string(block_id));
    double total = 0.0;
    for (const auto& term : unique_terms(query)) {
        const auto& list = postings(term);
        auto it = std::lower_bound(list.begin(), list.end(), *doc,
                                   [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (it == list.end() || it->doc != *doc) continue;
        total += idf(list.size()) * term_weight(it->tf, doc_lens_[*doc]);
    }
    return total;
}

std::vector<ScoredBlock> InvertedIndex::top_k(const TokenSeq& query, std::size_t k,
                                              std::optional<BlockKind> filter) const {
    if (k == 0 || num_docs() == 0) return {};
    std::vector<double> acc(num_docs(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& term : unique_terms(query)) {
        const auto& list = postings(term);
        if (list.empty()) continue;
        const double w = idf(list.size());
        for (const auto& p : list) {
            if (filter && doc_kinds_[p.doc] != *filter) continue;
            if (acc[p.doc] == 0.0) touched.push_back(p.doc);
            acc[p.doc] += w * term_weight(p.tf, doc_lens_[p.doc]);
        }
    }
    std::erase_if(touched, [&](std::uint32_t d) { return !(acc[d] > 0.0); });
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (acc[a] != acc[b]) return acc[a] > acc[b];
        return a < b;
    };
    const std::size_t keep = std::min(k, touched.size());
    std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(keep), touched.end(), better);
    std::vector<ScoredBlock> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back({doc_ids_[touched[i]], acc[touched[i]]});
    return out;
}

void InvertedIndex::save(std::ostream& out) const {
    json body;
    body["params"] = {{"k1", params_.k1}, {"b", params_.b}};
    body["N_docs"] = num_docs();
    body["avg_doc_len"] = avg_doc_len_;
    json lens = json::object();
    json kinds = json::object();
    for (std::size_t d = 0; d < num_docs(); ++d) {
        lens[doc_ids_[d]] = doc_lens_[d];
        kinds[doc_ids_[d]] = std::string(to_string(doc_kinds_[d]));
    }
    body["doc_len"] = std::move(lens);
    body["doc_kind"] = std::move(kinds);
    json post = json::object();
    for (const auto& [term, list] : postings_) {
        json arr = json::array();
        for (const auto& p : list) arr.push_back(json::array({doc_ids_[p.doc], p.tf}));
        post[term] = std::move(arr);
    }
    body["postings"] = std::move(post);
    out << kIndexSnapshotHeader << '\n' << body.dump() << '\n';
}

InvertedIndex InvertedIndex::load(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw SnapshotError("empty index snapshot");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kIndexSnapshotHeader) {
        throw SnapshotError("unsupported index snapshot header: \"" + header + "\"");
    }
    json body;
    try {
        body = json::parse(in);
    } catch (const json::exception& e) {
        throw SnapshotError(std::string("malformed index snapshot: ") + e.what());
    }

    try {
        Bm25Params params{body.at("params").at("k1").get<double>(), body.at("params").at("b").get<double>()};
        std::vector<IndexDoc> docs;
        const auto& lens = body.at("doc_len");
        const auto& kinds = body.at("doc_kind");
        for (auto it = lens.begin(); it != lens.end(); ++it) {
            IndexDoc d;
            d.id = it.key();
            auto kind = parse_block_kind(kinds.at(it.key()).get<std::string>());
            if (!kind) throw SnapshotError("unknown block kind for " + it.key());
            d.kind = *kind;
            docs.push_back(std::move(d));
        }
        InvertedIndex idx = build(std::move(docs), params, 1);
        if (idx.num_docs() != body.at("N_docs").get<std::size_t>()) {
            throw SnapshotError("N_docs does not match doc_len entries");
        }
        std::uint64_t total = 0;
        for (std::size_t d = 0; d < idx.num_docs(); ++d) {
            idx.doc_lens_[d] = lens.at(idx.doc_ids_[d]).get<std::uint32_t>();
            total += idx.doc_lens_[d];
        }
        idx.avg_doc_len_ = body.at("avg_doc_len").get<double>();
        const double mean = idx.num_docs() == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(idx.num_docs());
        if (std::abs(mean - idx.avg_doc_len_) > 1e-9 * std::max(1.0, mean)) {
            throw SnapshotError("avg_doc_len does not match doc_len entries");
        }
        for (auto it = body.at("postings").begin(); it != body.at("postings").end(); ++it) {
            auto& list = idx.postings_[it.key()];
            for (const auto& entry : it.value()) {
                auto doc = idx.doc_number(entry.at(0).get<std::string>());
                if (!doc) throw SnapshotError("posting references unknown doc " + entry.at(0).get<std::string>());
                list.push_back({*doc, entry.at(1).get<std::uint32_t>()});
            }
            std::sort(list.begin(), list.end(), [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
        }
        return idx;
    } catch (const json::exception& e) {
        throw SnapshotError(std::string("malformed index snapshot: ") + e.what());
    }
}

namespace {
IndexDoc doc_of(const Block& b) { return {b.id(), b.kind(), b.flat().seq.tokens}; }
}  // namespace

InvertedIndex build_index(const BlockPool& pool, const Bm25Params& params, std::size_t threads) {
    return build_index(pool.blocks(), params, threads);
}

InvertedIndex build_index(const std::vector<Block>& blocks, const Bm25Params& params, std::size_t threads) {
    std::vector<IndexDoc> docs;
    docs.reserve(blocks.size());
    for (const auto& b : blocks) docs.push_back(doc_of(b));
    return InvertedIndex::build(std::move(docs), params, threads);
}

InvertedIndex build_title_index(const std::vector<Passage>& passages, const Bm25Params& params,
                                std::size_t threads) {
    std::vector<IndexDoc> docs;
    docs.reserve(passages.size());
    for (const auto& p : passages) docs.push_back({p.id, BlockKind::Passage, tokenize(p.title).tokens});
    return InvertedIndex::build(std::move(docs), params, threads);
}

double bm25_score(const InvertedIndex& index, const TokenSeq& query, std::string_view block_id) {
    return index.score(query, block_id);
}

std::vector<ScoredBlock> top_k(const InvertedIndex& index, const TokenSeq& query, std::size_t k,
                               std::optional<BlockKind> filter) {
    return index.top_k(query, k, filter);
}

}  // namespace tabfuse
