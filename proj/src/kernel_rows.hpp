// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

// Row-level bodies shared by the serial and OpenMP kernels. Keeping one body
// per output row is what makes the two variants bit-identical.

#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hga/kernels.hpp"

namespace hga::kernels::rows {

inline void check_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  auto dst = out.row(i);
  for (std::size_t p = 0; p < a.cols(); ++p) {
    const double s = a(i, p);
    if (s == 0.0) continue;
    const auto src = b.row(p);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s * src[j];
  }
}

// Row i of a^T b: sum over r of a(r, i) * b.row(r), in increasing r.
inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  auto dst = out.row(i);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double s = a(r, i);
    if (s == 0.0) continue;
    const auto src = b.row(r);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s * src[j];
  }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const auto lhs = a.row(i);
  for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(lhs, b.row(j));
}

inline void spmm_row(const CsrMatrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  auto dst = out.row(i);
  for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
    const double s = a.values[e];
    const auto src = b.row(a.col_idx[e]);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s * src[j];
  }
}

inline std::vector<double> row_norms(const Matrix& points) {
  std::vector<double> norms(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) norms[i] = norm2(points.row(i));
  return norms;
}

// Scratch holds n candidate indices; it is reused across rows by one thread.
inline void knn_row(const Matrix& points, const std::vector<double>& norms, std::size_t k,
                    std::size_t i, std::vector<double>& sims, std::vector<std::size_t>& order,
                    KnnResult& out) {
  const std::size_t n = points.rows();
  const auto qi = points.row(i);
  const double ni = norms[i] + kCosineEps;
  for (std::size_t j = 0; j < n; ++j) {
    sims[j] = j == i ? 0.0 : dot(qi, points.row(j)) / (ni * (norms[j] + kCosineEps));
  }
  order.clear();
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) order.push_back(j);
  const auto better = [&](std::size_t x, std::size_t y) {
    return sims[x] != sims[y] ? sims[x] > sims[y] : x < y;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  for (std::size_t s = 0; s < k; ++s) {
    out.index[i * k + s] = order[s];
    out.similarity[i * k + s] = sims[order[s]];
  }
}

inline KnnResult knn_prepare(const Matrix& points, std::size_t k) {
  if (points.rows() < 2) throw std::invalid_argument("cosine_knn: need at least two points");
  if (k == 0) throw std::invalid_argument("cosine_knn: k must be >= 1");
  KnnResult out;
  out.n = points.rows();
  out.k = std::min(k, points.rows() - 1);
  out.index.assign(out.n * out.k, 0);
  out.similarity.assign(out.n * out.k, 0.0);
  return out;
}

}  // namespace hga::kernels::rows
