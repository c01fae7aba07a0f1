// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include "hga/kernels.hpp"
#include "kernel_rows.hpp"

namespace hga::kernels::parallel {

namespace {
// Below this many output rows the fork/join overhead dominates.
constexpr std::ptrdiff_t kMinParallelRows = 64;
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  rows::check_matmul(a, b);
  Matrix out(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i) rows::matmul_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: row count mismatch");
  Matrix out(a.cols(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
  // Output rows are few (a feature dimension) but each reduces over all nodes.
#pragma omp parallel for schedule(static) if (a.rows() >= 256 && n > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    rows::matmul_tn_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: column count mismatch");
  Matrix out(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    rows::matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Matrix spmm(const CsrMatrix& a, const Matrix& b) {
  if (a.cols != b.rows()) throw std::invalid_argument("spmm: inner dimension mismatch");
  Matrix out(a.rows, b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i) rows::spmm_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

KnnResult cosine_knn(const Matrix& points, std::size_t k) {
  KnnResult out = rows::knn_prepare(points, k);
  const auto norms = rows::row_norms(points);
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel if (n >= kMinParallelRows)
  {
    std::vector<double> sims(points.rows());
    std::vector<std::size_t> order;
    order.reserve(points.rows());
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      rows::knn_row(points, norms, out.k, static_cast<std::size_t>(i), sims, order, out);
  }
  return out;
}

}  // namespace hga::kernels::parallel
