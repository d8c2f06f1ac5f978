#include "tabfuse/attention.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "tabfuse/errors.hpp"

namespace tabfuse {

std::string_view to_string(GlobalRouting routing) noexcept {
    return routing == GlobalRouting::Own ? "own" : "all";
}

std::optional<GlobalRouting> parse_global_routing(std::string_view name) noexcept {
    if (name == "own") return GlobalRouting::Own;
    if (name == "all") return GlobalRouting::All;
    return std::nullopt;
}

void SparseAttentionConfig::validate() const {
    std::size_t expected = 0;
    for (std::size_t k = 0; k < block_bounds.size(); ++k) {
        const auto [begin, end] = block_bounds[k];
        if (begin != expected) {
            throw InvalidPartitionError("block " + std::to_string(k) + " starts at " + std::to_string(begin) +
                                        ", expected " + std::to_string(expected));
        }
        if (end <= begin) throw InvalidPartitionError("block " + std::to_string(k) + " is empty");
        expected = end;
    }
    if (expected != seq_len) {
        throw InvalidPartitionError("blocks cover " + std::to_string(expected) + " of " + std::to_string(seq_len) +
                                    " tokens");
    }
    if (num_nodes() > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidPartitionError("sequence too long");
    }
}

SparseAttentionConfig SparseAttentionConfig::uniform(std::size_t seq_len, std::size_t block_size, std::size_t radius,
                                                     GlobalRouting routing) {
    if (block_size == 0 && seq_len > 0) throw InvalidPartitionError("block size must be >= 1");
    SparseAttentionConfig cfg;
    cfg.seq_len = seq_len;
    cfg.radius = radius;
    cfg.routing = routing;
    for (std::size_t begin = 0; begin < seq_len; begin += block_size) {
        cfg.block_bounds.emplace_back(begin, std::min(seq_len, begin + block_size));
    }
    return cfg;
}

SparseAttentionConfig SparseAttentionConfig::from_lengths(std::span<const std::size_t> lengths, std::size_t radius,
                                                          GlobalRouting routing) {
    SparseAttentionConfig cfg;
    cfg.radius = radius;
    cfg.routing = routing;
    for (auto len : lengths) {
        cfg.block_bounds.emplace_back(cfg.seq_len, cfg.seq_len + len);
        cfg.seq_len += len;
    }
    return cfg;
}

bool AttentionMask::allows(std::size_t row, std::size_t col) const {
    const auto nbrs = neighbors(row);
    return std::binary_search(nbrs.begin(), nbrs.end(), static_cast<std::uint32_t>(col));
}

AttentionMask build_mask(const SparseAttentionConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.seq_len;
    const std::size_t k = cfg.num_globals();

    AttentionMask mask;
    mask.num_locals_ = n;
    mask.num_globals_ = k;
    mask.offsets_.reserve(n + k + 1);

    // Locals: the radius window clipped to the own block, then globals.
    for (std::size_t b = 0; b < k; ++b) {
        const auto [begin, end] = cfg.block_bounds[b];
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t lo = i - std::min(cfg.radius, i - begin);
            const std::size_t hi = std::min(end - 1, i + std::min(cfg.radius, end - 1 - i));
            for (std::size_t j = lo; j <= hi; ++j) mask.columns_.push_back(static_cast<std::uint32_t>(j));
            if (cfg.routing == GlobalRouting::Own) {
                mask.columns_.push_back(static_cast<std::uint32_t>(n + b));
            } else {
                for (std::size_t g = 0; g < k; ++g) mask.columns_.push_back(static_cast<std::uint32_t>(n + g));
            }
            mask.offsets_.push_back(mask.columns_.size());
        }
    }
    // Globals: every token of the own block, then every global.
    for (std::size_t b = 0; b < k; ++b) {
        const auto [begin, end] = cfg.block_bounds[b];
        for (std::size_t j = begin; j < end; ++j) mask.columns_.push_back(static_cast<std::uint32_t>(j));
        for (std::size_t g = 0; g < k; ++g) mask.columns_.push_back(static_cast<std::uint32_t>(n + g));
        mask.offsets_.push_back(mask.columns_.size());
    }
    return mask;
}

EdgeCounts edge_count(const AttentionMask& mask) {
    EdgeCounts c;
    for (std::size_t row = 0; row < mask.num_nodes(); ++row) {
        const bool row_global = mask.is_global(row);
        for (auto col : mask.neighbors(row)) {
            const bool col_global = mask.is_global(col);
            if (!row_global && !col_global) ++c.local_local;
            else if (!row_global) ++c.local_global;
            else if (!col_global) ++c.global_local;
            else ++c.global_global;
        }
    }
    c.total = c.local_local + c.local_global + c.global_local + c.global_global;
    return c;
}

std::size_t edge_count_bound(const SparseAttentionConfig& cfg) {
    const std::size_t n = cfg.seq_len;
    const std::size_t k = cfg.num_globals();
    const std::size_t k_att = cfg.routing == GlobalRouting::Own ? 1 : k;
    return n * (2 * cfg.radius + 1) + n * k_att + n + k * k;
}

Eigen::MatrixXd sparse_attention(const AttentionIO& io, const AttentionMask& mask) {
    const auto nodes = static_cast<Eigen::Index>(mask.num_nodes());
    if (io.queries.rows() != nodes || io.keys.rows() != nodes || io.values.rows() != nodes) {
        throw ShapeMismatchError("attention inputs need " + std::to_string(nodes) + " rows");
    }
    if (io.queries.cols() != io.keys.cols() || io.queries.cols() < 1) {
        throw ShapeMismatchError("queries and keys must share a width >= 1");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(io.queries.cols()));

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nodes, io.values.cols());
    std::vector<double> logits;
    for (Eigen::Index i = 0; i < nodes; ++i) {
        const auto nbrs = mask.neighbors(static_cast<std::size_t>(i));
        if (nbrs.empty()) continue;
        logits.resize(nbrs.size());
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < nbrs.size(); ++t) {
            logits[t] = io.queries.row(i).dot(io.keys.row(nbrs[t])) * scale;
            m = std::max(m, logits[t]);
        }
        double z = 0.0;
        for (auto& l : logits) {
            l = std::exp(l - m);
            z += l;
        }
        for (std::size_t t = 0; t < nbrs.size(); ++t) out.row(i) += (logits[t] / z) * io.values.row(nbrs[t]);
    }
    return out;
}

BoolMatrix::BoolMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_((cols + 63) / 64), bits_(rows * ((cols + 63) / 64), 0) {}

std::size_t BoolMatrix::count() const {
    std::size_t total = 0;
    for (auto w : bits_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
}

BoolMatrix reachability(const AttentionMask& mask, std::size_t layers) {
    if (layers < 1) throw Error("reachability needs at least one layer");
    const std::size_t nodes = mask.num_nodes();
    BoolMatrix current(nodes, nodes);
    for (std::size_t i = 0; i < nodes; ++i) current.set(i, i);

    // reach_L[i] = OR over neighbors j of reach_{L-1}[j]
    for (std::size_t layer = 0; layer < layers; ++layer) {
        BoolMatrix next(nodes, nodes);
        for (std::size_t i = 0; i < nodes; ++i) {
            std::uint64_t* dst = next.row_words(i);
            for (auto j : mask.neighbors(i)) {
                const std::uint64_t* src = current.row_words(j);
                for (std::size_t w = 0; w < next.words_per_row(); ++w) dst[w] |= src[w];
            }
        }
        current = std::move(next);
    }

    const std::size_t n = mask.num_locals();
    BoolMatrix locals(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (current.get(i, j)) locals.set(i, j);
        }
    }
    return locals;
}

}  // namespace tabfuse
