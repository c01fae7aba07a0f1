// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace hga {

std::size_t CsrMatrix::find(std::size_t r, std::size_t c) const noexcept {
  const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  const auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return nnz();
  return static_cast<std::size_t>(it - col_idx.begin());
}

double CsrMatrix::at(std::size_t r, std::size_t c) const noexcept {
  const std::size_t k = find(r, c);
  return k == nnz() ? 0.0 : values[k];
}

Matrix CsrMatrix::to_dense() const {
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out(r, col_idx[k]) = values[k];
  }
  return out;
}

CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix out;
  out.rows = rows;
  out.cols = cols;
  out.row_ptr.assign(rows + 1, 0);
  std::size_t i = 0;
  while (i < triplets.size()) {
    const Triplet& head = triplets[i];
    if (head.row >= rows || head.col >= cols) {
      throw std::out_of_range("csr_from_triplets: entry outside matrix shape");
    }
    double sum = 0.0;
    std::size_t j = i;
    for (; j < triplets.size() && triplets[j].row == head.row && triplets[j].col == head.col; ++j) {
      sum += triplets[j].value;
    }
    if (sum != 0.0) {
      out.col_idx.push_back(head.col);
      out.values.push_back(sum);
      ++out.row_ptr[head.row + 1];
    }
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) out.row_ptr[r + 1] += out.row_ptr[r];
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix hcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) throw std::invalid_argument("hcat: row count mismatch");
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
    std::copy(right.row(r).begin(), right.row(r).end(),
              dst.begin() + static_cast<std::ptrdiff_t>(left.cols()));
  }
  return out;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw std::invalid_argument("axpy: shape");
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] += alpha * x.data()[i];
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

bool all_finite(const Matrix& m) noexcept {
  return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace hga
