// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "hga/kernels.hpp"

namespace hga {

void LossWeights::validate() const {
  if (!(lambda >= 0.0) || !(gamma >= 0.0) || !(eta >= 0.0) || !(mu >= 0.0)) {
    throw std::invalid_argument("loss weights: lambda, gamma, eta and mu must be non-negative");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("loss weights: tau must be positive");
}

PropagatedLabels propagate_labels(const CsrMatrix& a, const std::vector<int>& known,
                                  std::size_t c) {
  const std::size_t n = a.rows;
  PropagatedLabels out{Matrix(n, c), std::vector<int>(n, kUndecided), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      const int y = known[a.col_idx[e]];
      if (y >= 0) out.ytil(i, static_cast<std::size_t>(y)) += a.values[e];
    }
    double best = 0.0;
    int arg = kUndecided;
    bool tie = false;
    for (std::size_t y = 0; y < c; ++y) {
      const double v = out.ytil(i, y);
      if (v > best) {
        best = v;
        arg = static_cast<int>(y);
        tie = false;
      } else if (v == best && v > 0.0) {
        tie = true;
      }
    }
    out.confidence[i] = best;
    out.hard[i] = tie ? kUndecided : arg;
    if (known[i] >= 0) out.hard[i] = known[i];
  }
  return out;
}

Matrix class_prototypes(const Matrix& values, const std::vector<int>& known, std::size_t c) {
  Matrix protos(c, values.cols());
  std::vector<std::size_t> count(c, 0);
  for (std::size_t i = 0; i < values.rows(); ++i) {
    if (known[i] < 0) continue;
    const auto y = static_cast<std::size_t>(known[i]);
    ++count[y];
    auto dst = protos.row(y);
    const auto src = values.row(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  for (std::size_t y = 0; y < c; ++y) {
    if (count[y] == 0) {
      throw std::invalid_argument("class without labeled support (class " + std::to_string(y) +
                                  ")");
    }
    for (double& v : protos.row(y)) v /= static_cast<double>(count[y]);
  }
  return protos;
}

void backprop_prototypes(const Matrix& grad_protos, const std::vector<int>& known,
                         Matrix& grad_values) {
  std::vector<std::size_t> count(grad_protos.rows(), 0);
  for (int y : known)
    if (y >= 0) ++count[static_cast<std::size_t>(y)];
  for (std::size_t i = 0; i < grad_values.rows(); ++i) {
    if (known[i] < 0) continue;
    const auto y = static_cast<std::size_t>(known[i]);
    const double inv = 1.0 / static_cast<double>(count[y]);
    auto dst = grad_values.row(i);
    const auto src = grad_protos.row(y);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += inv * src[k];
  }
}

void add_cosine_grad(std::span<const double> u, std::span<const double> v, double scale,
                     std::span<double> out) {
  const double nu = norm2(u);
  const double nv = norm2(v);
  const double denom = (nu + kernels::kCosineEps) * (nv + kernels::kCosineEps);
  const double s = dot(u, v) / denom;
  const double self = nu > 0.0 ? s / (nu * (nu + kernels::kCosineEps)) : 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) out[k] += scale * (v[k] / denom - self * u[k]);
}

LossGrad contrastive_loss(const Matrix& p, const Matrix& protos, const std::vector<int>& hard,
                          const std::vector<char>& labeled, const LossWeights& w) {
  const std::size_t c = protos.rows();
  if (c < 2) throw std::invalid_argument("contrastive loss needs >= 2 classes");
  LossGrad out{0.0, Matrix(p.rows(), p.cols()), Matrix(c, p.cols())};
  std::vector<double> sim(c), soft(c);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    if (hard[i] < 0) continue;
    const double weight = labeled[i] ? 1.0 : w.lambda;
    if (weight == 0.0) continue;
    const auto y = static_cast<std::size_t>(hard[i]);
    const auto pi = p.row(i);
    for (std::size_t k = 0; k < c; ++k) sim[k] = kernels::cosine(pi, protos.row(k)) / w.tau;
    double peak = -INFINITY;
    for (std::size_t k = 0; k < c; ++k)
      if (k != y) peak = std::max(peak, sim[k]);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      soft[k] = k == y ? 0.0 : std::exp(sim[k] - peak);
      total += soft[k];
    }
    const double lse = peak + std::log(total);
    out.value += weight * (lse - sim[y]);
    // d/dsim_k of (lse - sim_y), times 1/tau from sim = cos/tau.
    for (std::size_t k = 0; k < c; ++k) {
      const double g = weight * ((k == y ? -1.0 : soft[k] / total)) / w.tau;
      if (g == 0.0) continue;
      add_cosine_grad(pi, protos.row(k), g, out.grad_rows.row(i));
      add_cosine_grad(protos.row(k), pi, g, out.grad_protos.row(k));
    }
  }
  return out;
}

Matrix normalize_feature_rows(const Matrix& x) {
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    double lo = INFINITY;
    for (double v : row) lo = std::min(lo, v);
    double total = 0.0;
    for (double& v : row) {
      v = v - lo + kLogEps;
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

ReconstructionLoss reconstruction_loss(const CsrMatrix& a, const Matrix& x_bar,
                                       const std::vector<std::size_t>& sample) {
  if (sample.empty()) throw std::invalid_argument("reconstruction loss: empty node sample");
  const std::size_t f = x_bar.cols();
  ReconstructionLoss out;
  out.grad_a.assign(a.nnz(), 0.0);
  std::vector<double> r(f), g(f), gbn;
  for (std::size_t i : sample) {
    const std::size_t lo = a.row_ptr[i], hi = a.row_ptr[i + 1];
    double deg = 1.0;
    for (std::size_t e = lo; e < hi; ++e) deg += a.values[e];
    // R0 = (x_i + sum_k a_ik x_k) / deg
    for (std::size_t j = 0; j < f; ++j) r[j] = x_bar(i, j);
    for (std::size_t e = lo; e < hi; ++e) {
      const auto xk = x_bar.row(a.col_idx[e]);
      for (std::size_t j = 0; j < f; ++j) r[j] += a.values[e] * xk[j];
    }
    double rs = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      r[j] /= deg;
      rs += r[j];
    }
    for (std::size_t j = 0; j < f; ++j) r[j] /= rs;

    double gr_dot_r = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      out.value -= x_bar(i, j) * std::log(r[j] + kLogEps);
      g[j] = -x_bar(i, j) / (r[j] + kLogEps);
      gr_dot_r += g[j] * r[j];
    }
    // Through R = R0 / rs.
    for (std::size_t j = 0; j < f; ++j) g[j] = (g[j] - gr_dot_r) / rs;
    // Through R0 = sum_k Bn_ik x_k with Bn_ik = B_ik / deg.
    const double g_self = dot(g, x_bar.row(i));
    double g_dot_bn = g_self * (1.0 / deg);
    gbn.assign(hi - lo, 0.0);
    for (std::size_t e = lo; e < hi; ++e) {
      gbn[e - lo] = dot(g, x_bar.row(a.col_idx[e]));
      g_dot_bn += gbn[e - lo] * (a.values[e] / deg);
    }
    for (std::size_t e = lo; e < hi; ++e) out.grad_a[e] += (gbn[e - lo] - g_dot_bn) / deg;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_margin_pairs(const std::vector<int>& hard,
                                                                     std::size_t c, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < hard.size(); ++i)
    if (hard[i] >= 0) by_class[static_cast<std::size_t>(hard[i])].push_back(i);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < hard.size(); ++i) {
    if (hard[i] < 0) continue;
    for (std::size_t y = 0; y < c; ++y) {
      if (static_cast<int>(y) == hard[i] || by_class[y].empty()) continue;
      pairs.emplace_back(i, by_class[y][rng.index(by_class[y].size())]);
    }
  }
  return pairs;
}

LossGrad margin_loss(const Matrix& protos, const Matrix& m_hat, const std::vector<int>& hard,
                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double gamma,
                     bool* degenerate) {
  LossGrad out{0.0, Matrix(m_hat.rows(), m_hat.cols()), Matrix(protos.rows(), protos.cols())};
  if (degenerate) *degenerate = pairs.empty();
  const std::size_t dim = m_hat.cols();
  for (const auto& [i, j] : pairs) {
    const auto y = static_cast<std::size_t>(hard[i]);
    const auto c = protos.row(y);
    const auto mi = m_hat.row(i);
    const auto mj = m_hat.row(j);
    double di = 0.0, dj = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      di += (c[k] - mi[k]) * (c[k] - mi[k]);
      dj += (c[k] - mj[k]) * (c[k] - mj[k]);
    }
    const double hinge = di - dj + gamma;
    if (!(hinge > 0.0)) continue;
    out.value += hinge;
    auto gi = out.grad_rows.row(i);
    auto gj = out.grad_rows.row(j);
    auto gc = out.grad_protos.row(y);
    for (std::size_t k = 0; k < dim; ++k) {
      gi[k] += 2.0 * (mi[k] - c[k]);
      gj[k] += 2.0 * (c[k] - mj[k]);
      gc[k] += 2.0 * (mj[k] - mi[k]);
    }
  }
  return out;
}

LossGrad infonce_alignment_loss(const Matrix& protos, const Matrix& m_hat,
                                const std::vector<int>& hard, double tau) {
  const std::size_t c = protos.rows();
  LossGrad out{0.0, Matrix(m_hat.rows(), m_hat.cols()), Matrix(c, protos.cols())};
  std::vector<double> sim(c);
  for (std::size_t i = 0; i < m_hat.rows(); ++i) {
    if (hard[i] < 0) continue;
    const auto y = static_cast<std::size_t>(hard[i]);
    const auto mi = m_hat.row(i);
    double peak = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) {
      sim[k] = kernels::cosine(mi, protos.row(k)) / tau;
      peak = std::max(peak, sim[k]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) total += std::exp(sim[k] - peak);
    out.value += peak + std::log(total) - sim[y];
    for (std::size_t k = 0; k < c; ++k) {
      const double g = (std::exp(sim[k] - peak) / total - (k == y ? 1.0 : 0.0)) / tau;
      add_cosine_grad(mi, protos.row(k), g, out.grad_rows.row(i));
      add_cosine_grad(protos.row(k), mi, g, out.grad_protos.row(k));
    }
  }
  return out;
}

double total_objective(const LossParts& parts, const LossWeights& w) {
  const double con = w.use_contrastive ? parts.con : 0.0;
  return con + w.eta * parts.rec + w.mu * parts.mar;
}

}  // namespace hga
