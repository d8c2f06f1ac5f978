#include <benchmark/benchmark.h>

#include <random>

#include "tabfuse/attention.hpp"

namespace {

tabfuse::AttentionIO random_io(std::size_t nodes, Eigen::Index d) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    auto m = [&] {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(nodes), d);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        return x;
    };
    return {m(), m(), m()};
}

void BM_BuildMask(benchmark::State& state) {
    const auto cfg = tabfuse::SparseAttentionConfig::uniform(static_cast<std::size_t>(state.range(0)), 128, 84,
                                                             tabfuse::GlobalRouting::Own);
    for (auto _ : state) benchmark::DoNotOptimize(tabfuse::build_mask(cfg));
}
BENCHMARK(BM_BuildMask)->RangeMultiplier(2)->Range(512, 4096);

void BM_SparseAttention(benchmark::State& state) {
    const auto cfg = tabfuse::SparseAttentionConfig::uniform(static_cast<std::size_t>(state.range(0)), 128, 84,
                                                             tabfuse::GlobalRouting::Own);
    const auto mask = tabfuse::build_mask(cfg);
    const auto io = random_io(mask.num_nodes(), 32);
    for (auto _ : state) benchmark::DoNotOptimize(tabfuse::sparse_attention(io, mask));
    state.counters["edges"] = static_cast<double>(mask.num_edges());
}
BENCHMARK(BM_SparseAttention)->RangeMultiplier(2)->Range(512, 4096);

// Full softmax over every pair, the quadratic baseline.
void BM_DenseAttention(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto io = random_io(n, 32);
    for (auto _ : state) {
        Eigen::MatrixXd logits = io.queries * io.keys.transpose() / std::sqrt(32.0);
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            logits.row(i).array() -= logits.row(i).maxCoeff();
            logits.row(i) = logits.row(i).array().exp().matrix();
            logits.row(i) /= logits.row(i).sum();
        }
        benchmark::DoNotOptimize(Eigen::MatrixXd(logits * io.values));
    }
}
BENCHMARK(BM_DenseAttention)->RangeMultiplier(2)->Range(512, 4096);

}  // namespace
