// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/kernels.hpp"
#include "kernel_rows.hpp"

namespace hga::kernels {

double cosine(std::span<const double> a, std::span<const double> b) noexcept {
  return dot(a, b) / ((norm2(a) + kCosineEps) * (norm2(b) + kCosineEps));
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  rows::check_matmul(a, b);
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) rows::matmul_row(a, b, out, i);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: row count mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) rows::matmul_tn_row(a, b, out, i);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: column count mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) rows::matmul_nt_row(a, b, out, i);
  return out;
}

Matrix spmm(const CsrMatrix& a, const Matrix& b) {
  if (a.cols != b.rows()) throw std::invalid_argument("spmm: inner dimension mismatch");
  Matrix out(a.rows, b.cols());
  for (std::size_t i = 0; i < a.rows; ++i) rows::spmm_row(a, b, out, i);
  return out;
}

KnnResult cosine_knn(const Matrix& points, std::size_t k) {
  KnnResult out = rows::knn_prepare(points, k);
  const auto norms = rows::row_norms(points);
  std::vector<double> sims(points.rows());
  std::vector<std::size_t> order;
  order.reserve(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i)
    rows::knn_row(points, norms, out.k, i, sims, order, out);
  return out;
}

}  // namespace serial
}  // namespace hga::kernels
