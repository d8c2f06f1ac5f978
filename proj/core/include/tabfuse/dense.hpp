#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tabfuse/corpus.hpp"
#include "tabfuse/index.hpp"

namespace tabfuse {

/// Text -> fixed-length vector. Implementations must be deterministic.
class Encoder {
public:
    virtual ~Encoder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::string tag() const = 0;
    virtual Eigen::VectorXd encode(std::string_view text) const = 0;
};

/// Signed feature hashing of unigram counts, L2-normalized. Test stand-in for
/// a trained encoder.
Eigen::VectorXd hashed_bow_encode(std::string_view text, std::size_t dim, std::uint64_t seed = 0);

class HashedBowEncoder final : public Encoder {
public:
    explicit HashedBowEncoder(std::size_t dim, std::uint64_t seed = 0);
    std::size_t dim() const override { return dim_; }
    std::string tag() const override;
    Eigen::VectorXd encode(std::string_view text) const override {
        return hashed_bow_encode(text, dim_, seed_);
    }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Immutable-after-load table of block vectors.
class EmbeddingStore {
public:
    EmbeddingStore(std::size_t dim, std::string encoder_tag);

    /// Throws DimMismatchError, DuplicateIdError, or Error for non-finite values.
    void add(std::string id, const Eigen::Ref<const Eigen::VectorXd>& vector,
             std::optional<BlockKind> kind = std::nullopt);

    /// Attaches block kinds from a pool so kind filters can be applied.
    void bind_kinds(const BlockPool& pool);

    std::size_t dim() const noexcept { return dim_; }
    const std::string& encoder_tag() const noexcept { return tag_; }
    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::optional<BlockKind> kind(std::size_t row) const { return kinds_.at(row); }
    Eigen::Map<const Eigen::VectorXd> row(std::size_t i) const;
    std::optional<std::size_t> find(std::string_view id) const;

    /// Scales every stored vector by `factor`.
    void scale(double factor);

    /// "# dim=<d> encoder=<tag>" header, then "<id>\t<floats>" lines.
    void save_tsv(std::ostream& out) const;
    static EmbeddingStore load_tsv(std::istream& in);

private:
    std::size_t dim_;
    std::string tag_;
    std::vector<std::string> ids_;
    std::vector<std::optional<BlockKind>> kinds_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> rows_;
};

/// Encodes the flattened text of every block.
EmbeddingStore embed_pool(const BlockPool& pool, const Encoder& encoder, std::size_t threads = 1);

/// Exact inner-product search, score descending then id ascending. A kind
/// filter only matches rows whose kind is known.
std::vector<ScoredBlock> dense_top_k(const EmbeddingStore& store, const Eigen::Ref<const Eigen::VectorXd>& query,
                                     std::size_t k, std::optional<BlockKind> filter = std::nullopt);

struct BatchLoss {
    double loss = 0.0;
    Eigen::MatrixXd grad_q;
    Eigen::MatrixXd grad_b;
};

/// Softmax cross-entropy over S = Q * B^T where row i's positive is column i
/// and the other B-1 columns are negatives; loss is the batch mean. Gradients
/// are closed form.
BatchLoss in_batch_loss(const Eigen::Ref<const Eigen::MatrixXd>& queries,
                        const Eigen::Ref<const Eigen::MatrixXd>& blocks);

}  // namespace tabfuse
