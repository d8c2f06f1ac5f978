#include "tabfuse/dense.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "tabfuse/errors.hpp"
#include "tabfuse/parallel.hpp"

namespace tabfuse {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

Eigen::VectorXd hashed_bow_encode(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw Error("encoder dimension must be >= 1");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& token : tokenize(text).tokens) {
        const std::uint64_t h = splitmix64(fnv1a(token) ^ seed);
        const auto bucket = static_cast<Eigen::Index>(h % dim);
        const double sign = (splitmix64(h) >> 63) != 0 ? -1.0 : 1.0;
        v[bucket] += sign;
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

HashedBowEncoder::HashedBowEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim == 0) throw Error("encoder dimension must be >= 1");
}

std::string HashedBowEncoder::tag() const {
    return "hashed-bow/seed=" + std::to_string(seed_);
}

EmbeddingStore::EmbeddingStore(std::size_t dim, std::string encoder_tag) : dim_(dim), tag_(std::move(encoder_tag)) {
    if (dim == 0) throw Error("embedding dimension must be >= 1");
}

void EmbeddingStore::add(std::string id, const Eigen::Ref<const Eigen::VectorXd>& vector,
                         std::optional<BlockKind> kind) {
    if (static_cast<std::size_t>(vector.size()) != dim_) {
        throw DimMismatchError(dim_, static_cast<std::size_t>(vector.size()));
    }
    if (!vector.allFinite()) throw Error("non-finite embedding for " + id);
    if (!rows_.emplace(id, ids_.size()).second) throw DuplicateIdError(id);
    ids_.push_back(std::move(id));
    kinds_.push_back(kind);
    data_.insert(data_.end(), vector.data(), vector.data() + vector.size());
}

void EmbeddingStore::bind_kinds(const BlockPool& pool) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (const Block* b = pool.find(ids_[i])) kinds_[i] = b->kind();
    }
}

Eigen::Map<const Eigen::VectorXd> EmbeddingStore::row(std::size_t i) const {
    return {data_.data() + i * dim_, static_cast<Eigen::Index>(dim_)};
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view id) const {
    auto it = rows_.find(std::string(id));
    if (it == rows_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingStore::scale(double factor) {
    for (auto& x : data_) x *= factor;
}

void EmbeddingStore::save_tsv(std::ostream& out) const {
    out << "# dim=" << dim_ << " encoder=" << tag_ << '\n';
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        out << ids_[i] << '\t';
        for (std::size_t j = 0; j < dim_; ++j) {
            if (j > 0) out << ' ';
            out << format_double(data_[i * dim_ + j]);
        }
        out << '\n';
    }
}

EmbeddingStore EmbeddingStore::load_tsv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "missing embeddings header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t dim = 0;
    std::string tag;
    {
        std::istringstream header(line);
        std::string hash;
        std::string dim_field;
        std::string enc_field;
        header >> hash >> dim_field >> enc_field;
        if (hash != "#" || dim_field.rfind("dim=", 0) != 0 || enc_field.rfind("encoder=", 0) != 0) {
            throw ParseError(1, "expected header \"# dim=<d> encoder=<tag>\"");
        }
        const std::string d = dim_field.substr(4);
        auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), dim);
        if (ec != std::errc() || ptr != d.data() + d.size() || dim == 0) {
            throw ParseError(1, "invalid dim in header");
        }
        tag = enc_field.substr(8);
    }

    EmbeddingStore store(dim, tag);
    std::size_t number = 1;
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) throw ParseError(number, "expected \"<id>\\t<floats>\"");
        std::string id = line.substr(0, tab);
        const char* p = line.data() + tab + 1;
        const char* end = line.data() + line.size();
        std::size_t count = 0;
        while (p < end) {
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            double x = 0.0;
            auto [next, ec] = std::from_chars(p, end, x);
            if (ec != std::errc()) throw ParseError(number, "invalid float");
            if (count < dim) v[static_cast<Eigen::Index>(count)] = x;
            ++count;
            p = next;
        }
        if (count != dim) throw DimMismatchError(dim, count);
        store.add(std::move(id), v);
    }
    return store;
}

EmbeddingStore embed_pool(const BlockPool& pool, const Encoder& encoder, std::size_t threads) {
    std::vector<Eigen::VectorXd> vectors(pool.size());
    parallel_for(pool.size(), threads, [&](std::size_t i) {
        vectors[i] = encoder.encode(pool.blocks()[i].flat().text);
    });
    EmbeddingStore store(encoder.dim(), encoder.tag());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const Block& b = pool.blocks()[i];
        store.add(b.id(), vectors[i], b.kind());
    }
    return store;
}

std::vector<ScoredBlock> dense_top_k(const EmbeddingStore& store, const Eigen::Ref<const Eigen::VectorXd>& query,
                                     std::size_t k, std::optional<BlockKind> filter) {
    if (static_cast<std::size_t>(query.size()) != store.dim()) {
        throw DimMismatchError(store.dim(), static_cast<std::size_t>(query.size()));
    }
    if (k == 0) return {};
    std::vector<ScoredBlock> scored;
    scored.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        if (filter && store.kind(i) != filter) continue;
        scored.push_back({store.ids()[i], store.row(i).dot(query)});
    }
    const std::size_t keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), ranks_before);
    scored.resize(keep);
    return scored;
}

BatchLoss in_batch_loss(const Eigen::Ref<const Eigen::MatrixXd>& queries,
                        const Eigen::Ref<const Eigen::MatrixXd>& blocks) {
    if (queries.rows() != blocks.rows()) {
        throw DimMismatchError(static_cast<std::size_t>(queries.rows()), static_cast<std::size_t>(blocks.rows()));
    }
    if (queries.cols() != blocks.cols()) {
        throw DimMismatchError(static_cast<std::size_t>(queries.cols()), static_cast<std::size_t>(blocks.cols()));
    }
    const Eigen::Index n = queries.rows();
    if (n == 0) throw Error("batch must hold at least one pair");

    const Eigen::MatrixXd logits = queries * blocks.transpose();
    Eigen::MatrixXd probs(n, n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(i).array() - m).exp().matrix();
        const double z = e.sum();
        total += (m + std::log(z)) - logits(i, i);
        probs.row(i) = e / z;
    }

    // dL/dS = (softmax(S) - I) / B
    Eigen::MatrixXd g = probs;
    g.diagonal().array() -= 1.0;
    g /= static_cast<double>(n);

    BatchLoss out;
    out.loss = total / static_cast<double>(n);
    out.grad_q = g * blocks;
    out.grad_b = g.transpose() * queries;
    return out;
}

}  // namespace tabfuse
