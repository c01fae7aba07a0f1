// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

// Serial vs OpenMP kernels on shapes of the default synthetic run
// (n = 600 target nodes, d = 64, k = 10).

#include <benchmark/benchmark.h>

#include "hga/kernels.hpp"
#include "hga/rng.hpp"

namespace {

using hga::Matrix;
namespace k = hga::kernels;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  hga::Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

hga::CsrMatrix knn_graph(std::size_t n, std::size_t deg, std::uint64_t seed) {
  hga::Rng rng(seed);
  std::vector<hga::Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = 0; e < deg; ++e) t.push_back({i, rng.index(n), rng.uniform()});
  return hga::csr_from_triplets(n, n, std::move(t));
}

template <Matrix (*Fn)(const Matrix&, const Matrix&)>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 64, 1), b = random_matrix(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 64 * 64));
}

template <Matrix (*Fn)(const Matrix&, const Matrix&)>
void BM_MatmulTn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 64, 1), g = random_matrix(n, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, g));
}

template <Matrix (*Fn)(const hga::CsrMatrix&, const Matrix&)>
void BM_Spmm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const hga::CsrMatrix a = knn_graph(n, 20, 3);
  const Matrix f = random_matrix(n, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, f));
}

template <k::KnnResult (*Fn)(const Matrix&, std::size_t)>
void BM_CosineKnn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix p = random_matrix(n, 64, 5);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p, 10));
}

}  // namespace

BENCHMARK(BM_Matmul<k::serial::matmul>)->Arg(600)->Arg(4800);
BENCHMARK(BM_Matmul<k::parallel::matmul>)->Arg(600)->Arg(4800);
BENCHMARK(BM_MatmulTn<k::serial::matmul_tn>)->Arg(600)->Arg(4800);
BENCHMARK(BM_MatmulTn<k::parallel::matmul_tn>)->Arg(600)->Arg(4800);
BENCHMARK(BM_Spmm<k::serial::spmm>)->Arg(600)->Arg(4800);
BENCHMARK(BM_Spmm<k::parallel::spmm>)->Arg(600)->Arg(4800);
BENCHMARK(BM_CosineKnn<k::serial::cosine_knn>)->Arg(600)->Arg(2400);
BENCHMARK(BM_CosineKnn<k::parallel::cosine_knn>)->Arg(600)->Arg(2400);

BENCHMARK_MAIN();
