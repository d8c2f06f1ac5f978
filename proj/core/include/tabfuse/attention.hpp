#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace tabfuse {

/// How local tokens reach global states: only their own block's global, or
/// every global.
enum class GlobalRouting { Own, All };

std::string_view to_string(GlobalRouting routing) noexcept;
std::optional<GlobalRouting> parse_global_routing(std::string_view name) noexcept;

/// Global-local sparse attention layout over N local tokens and one global
/// state per block. Node order: locals 0..N-1, then globals N..N+K-1.
struct SparseAttentionConfig {
    std::size_t seq_len = 0;                                        // N
    std::vector<std::pair<std::size_t, std::size_t>> block_bounds;  // [begin, end), ordered
    std::size_t radius = 84;                                        // R
    GlobalRouting routing = GlobalRouting::All;

    std::size_t num_globals() const noexcept { return block_bounds.size(); }
    std::size_t num_nodes() const noexcept { return seq_len + block_bounds.size(); }

    /// Throws InvalidPartitionError unless the blocks tile [0, N) with
    /// non-empty, ordered, non-overlapping ranges.
    void validate() const;

    /// Blocks of `block_size` tokens (the last may be shorter).
    static SparseAttentionConfig uniform(std::size_t seq_len, std::size_t block_size, std::size_t radius,
                                         GlobalRouting routing);
    /// Consecutive blocks of the given lengths.
    static SparseAttentionConfig from_lengths(std::span<const std::size_t> lengths, std::size_t radius,
                                              GlobalRouting routing);
};

/// Directed "row attends column" relation stored as sorted neighbor lists
/// (CSR).
class AttentionMask {
public:
    std::size_t num_locals() const noexcept { return num_locals_; }
    std::size_t num_globals() const noexcept { return num_globals_; }
    std::size_t num_nodes() const noexcept { return num_locals_ + num_globals_; }
    std::size_t num_edges() const noexcept { return columns_.size(); }

    std::span<const std::uint32_t> neighbors(std::size_t row) const {
        return {columns_.data() + offsets_[row], offsets_[row + 1] - offsets_[row]};
    }
    bool allows(std::size_t row, std::size_t col) const;
    bool is_global(std::size_t node) const noexcept { return node >= num_locals_; }

private:
    friend AttentionMask build_mask(const SparseAttentionConfig& cfg);

    std::size_t num_locals_ = 0;
    std::size_t num_globals_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::uint32_t> columns_;
};

AttentionMask build_mask(const SparseAttentionConfig& cfg);

struct EdgeCounts {
    std::size_t local_local = 0;
    std::size_t local_global = 0;
    std::size_t global_local = 0;
    std::size_t global_global = 0;
    std::size_t total = 0;
};

EdgeCounts edge_count(const AttentionMask& mask);

/// Upper bound N(2R+1) + N*K_att + N + K^2 with K_att = 1 (Own) or K (All).
std::size_t edge_count_bound(const SparseAttentionConfig& cfg);

struct AttentionIO {
    Eigen::MatrixXd queries;  // (N+K) x d
    Eigen::MatrixXd keys;     // (N+K) x d
    Eigen::MatrixXd values;   // (N+K) x d
};

/// Scaled dot-product attention restricted to the mask's edges. Only allowed
/// pairs are touched. Throws ShapeMismatchError.
Eigen::MatrixXd sparse_attention(const AttentionIO& io, const AttentionMask& mask);

/// Dense row-major bit matrix.
class BoolMatrix {
public:
    BoolMatrix() = default;
    BoolMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool get(std::size_t r, std::size_t c) const {
        return ((bits_[r * words_ + c / 64] >> (c % 64)) & 1U) != 0;
    }
    void set(std::size_t r, std::size_t c) { bits_[r * words_ + c / 64] |= std::uint64_t{1} << (c % 64); }
    std::size_t count() const;
    bool all() const { return count() == rows_ * cols_; }
    bool operator==(const BoolMatrix&) const = default;

    std::uint64_t* row_words(std::size_t r) { return bits_.data() + r * words_; }
    const std::uint64_t* row_words(std::size_t r) const { return bits_.data() + r * words_; }
    std::size_t words_per_row() const noexcept { return words_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Entry (i, j) over local tokens is true iff token j's information reaches
/// token i within `layers` attention applications.
BoolMatrix reachability(const AttentionMask& mask, std::size_t layers);

}  // namespace tabfuse
