// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hga/matrix.hpp"
#include "hga/rng.hpp"

namespace hga {

/// Hard label of a node whose propagated row carries no unique maximum.
inline constexpr int kUndecided = -1;

enum class MarginVariant { kHinge, kInfoNce };

struct LossWeights {
  double lambda = 1.0;  ///< weight of the unlabeled contrastive term
  double tau = 0.5;     ///< temperature
  double gamma = 1.0;   ///< margin
  double eta = 1.0;     ///< reconstruction weight
  double mu = 1.0;      ///< margin-loss weight
  /// False removes the whole contrastive term (ablation only).
  bool use_contrastive = true;
  MarginVariant margin_variant = MarginVariant::kHinge;

  void validate() const;
};

struct PropagatedLabels {
  Matrix ytil;                     ///< A Y
  std::vector<int> hard;           ///< class or kUndecided
  std::vector<double> confidence;  ///< row maximum of ytil
};

/// Ytil = A Y with Y one-hot on labeled nodes (label >= 0 in `known`).
/// Hard labels are the unique row argmax; labeled nodes keep their label.
PropagatedLabels propagate_labels(const CsrMatrix& a, const std::vector<int>& known,
                                  std::size_t num_classes);

/// Mean row of `values` per class over nodes with label >= 0 in `known`.
/// Throws std::invalid_argument("class without labeled support") when a
/// class has no labeled node.
Matrix class_prototypes(const Matrix& values, const std::vector<int>& known,
                        std::size_t num_classes);

/// Prediction-space prototypes used by the contrastive loss and classifier.
inline Matrix class_prototypes_pred(const Matrix& p, const std::vector<int>& known,
                                    std::size_t c) {
  return class_prototypes(p, known, c);
}

/// Prototypes in the heterogeneous adapted space used by the margin loss.
inline Matrix class_prototypes_rep(const Matrix& m_hat, const std::vector<int>& known,
                                   std::size_t c) {
  return class_prototypes(m_hat, known, c);
}

/// Adds the gradient flowing into class prototypes back onto the rows they
/// average.
void backprop_prototypes(const Matrix& grad_protos, const std::vector<int>& known,
                         Matrix& grad_values);

/// A loss value with its gradient w.r.t. the per-node rows and, where the
/// loss consumes prototypes, w.r.t. the prototypes.
struct LossGrad {
  double value = 0.0;
  Matrix grad_rows;
  Matrix grad_protos;
};

/// Gradient of cos(u, v) (with the norm guard) w.r.t. u, scaled by `scale`
/// and added to `out`.
void add_cosine_grad(std::span<const double> u, std::span<const double> v, double scale,
                     std::span<double> out);

/// Label-propagated prototype contrastive loss. For each decided node i with
/// label y: -w_i * ln[ exp(sim(p_i, c_y)/tau) / sum_{y' != y} exp(sim(p_i, c_y')/tau) ],
/// w_i = 1 for labeled nodes and lambda otherwise.
LossGrad contrastive_loss(const Matrix& p, const Matrix& protos, const std::vector<int>& hard,
                          const std::vector<char>& labeled, const LossWeights& weights);

/// Row-stochastic version of a feature matrix: shift each row by its
/// minimum, add eps, divide by the row sum.
Matrix normalize_feature_rows(const Matrix& x);

inline constexpr double kLogEps = 1e-12;

/// Cross-entropy between normalized features and their reconstruction
/// R = rownorm(rownorm(A + I) Xbar), summed over the sampled nodes, with the
/// gradient w.r.t. the stored entries of A.
struct ReconstructionLoss {
  double value = 0.0;
  std::vector<double> grad_a;  ///< aligned with a.values
};

ReconstructionLoss reconstruction_loss(const CsrMatrix& a, const Matrix& x_bar,
                                       const std::vector<std::size_t>& sample);

/// Pairs (i, j) with different decided labels: for every decided node i and
/// every other class present among decided nodes, one j drawn uniformly.
std::vector<std::pair<std::size_t, std::size_t>> sample_margin_pairs(const std::vector<int>& hard,
                                                                     std::size_t num_classes,
                                                                     Rng& rng);

/// Hinge sum of max(0, |c_{y_i} - m_i|^2 - |c_{y_i} - m_j|^2 + gamma).
/// Sets `degenerate` when fewer than two classes are decided (value 0).
LossGrad margin_loss(const Matrix& protos, const Matrix& m_hat, const std::vector<int>& hard,
                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double gamma,
                     bool* degenerate = nullptr);

/// Alignment variant used only in ablations: InfoNCE of cos(m_i, c_y)/tau
/// over all classes, summed over decided nodes.
LossGrad infonce_alignment_loss(const Matrix& protos, const Matrix& m_hat,
                                const std::vector<int>& hard, double tau);

struct LossParts {
  double con = 0.0;
  double rec = 0.0;
  double mar = 0.0;
};

/// J = L_con + eta L_rec + mu L_mar (L_con dropped when disabled).
double total_objective(const LossParts& parts, const LossWeights& weights);

}  // namespace hga
