// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "hga/matrix.hpp"

/// Data-parallel numeric kernels.
///
/// Every kernel exists twice: `serial::` is the plain reference loop nest and
/// `parallel::` distributes output rows across OpenMP threads. Each output
/// element is reduced by exactly one thread in the same order as the serial
/// version, so both produce bit-identical results for any thread count.
/// Engine code calls the unqualified `hga::kernels::` names, which forward to
/// the parallel versions.
namespace hga::kernels {

/// Guard added to each vector norm in cosine similarity.
inline constexpr double kCosineEps = 1e-12;

/// Per-row k nearest neighbours by cosine similarity (self excluded).
/// Row i owns slots [i*k, (i+1)*k); slots are ordered by decreasing
/// similarity, ties broken by smaller column index.
struct KnnResult {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> index;
  std::vector<double> similarity;
};

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix spmm(const CsrMatrix& a, const Matrix& b);    // sparse a * dense b
KnnResult cosine_knn(const Matrix& points, std::size_t k);
}  // namespace serial

namespace parallel {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const CsrMatrix& a, const Matrix& b);
KnnResult cosine_knn(const Matrix& points, std::size_t k);
}  // namespace parallel

inline Matrix matmul(const Matrix& a, const Matrix& b) { return parallel::matmul(a, b); }
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) { return parallel::matmul_tn(a, b); }
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) { return parallel::matmul_nt(a, b); }
inline Matrix spmm(const CsrMatrix& a, const Matrix& b) { return parallel::spmm(a, b); }
inline KnnResult cosine_knn(const Matrix& points, std::size_t k) {
  return parallel::cosine_knn(points, k);
}

/// Cosine similarity with the norm guard; shared by structure learning,
/// the losses and classification.
double cosine(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace hga::kernels
