#include <benchmark/benchmark.h>

#include <random>

#include "tabfuse/dense.hpp"
#include "tabfuse/index.hpp"

namespace {

std::vector<tabfuse::IndexDoc> synthetic_docs(std::size_t n, std::size_t vocab, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<tabfuse::IndexDoc> docs;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> tokens;
        for (std::size_t t = 0; t < 60; ++t) tokens.push_back("w" + std::to_string(rng() % vocab));
        docs.push_back({"d" + std::to_string(i), tabfuse::BlockKind::Passage, std::move(tokens)});
    }
    return docs;
}

void BM_Bm25TopK(benchmark::State& state) {
    const auto docs = synthetic_docs(static_cast<std::size_t>(state.range(0)), 5000, 1);
    const auto index = tabfuse::InvertedIndex::build(docs, {});
    tabfuse::TokenSeq query;
    for (const char* t : {"w1", "w17", "w230", "w4000"}) query.push_back(t, {});
    for (auto _ : state) benchmark::DoNotOptimize(index.top_k(query, 20));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25TopK)->Arg(1000)->Arg(10000)->Arg(50000);

void BM_Bm25Build(benchmark::State& state) {
    const auto docs = synthetic_docs(static_cast<std::size_t>(state.range(0)), 5000, 2);
    for (auto _ : state) benchmark::DoNotOptimize(tabfuse::InvertedIndex::build(docs, {}));
}
BENCHMARK(BM_Bm25Build)->Arg(1000)->Arg(10000);

void BM_DenseTopK(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    const std::size_t dim = 128;
    tabfuse::EmbeddingStore store(dim, "bench");
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
        for (auto& x : v) x = normal(rng);
        store.add("b" + std::to_string(i), v);
    }
    Eigen::VectorXd q(static_cast<Eigen::Index>(dim));
    for (auto& x : q) x = normal(rng);
    for (auto _ : state) benchmark::DoNotOptimize(tabfuse::dense_top_k(store, q, 20));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenseTopK)->Arg(1000)->Arg(10000);

}  // namespace
