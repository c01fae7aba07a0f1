// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "hga/checkpoint.hpp"
#include "hga/encoder.hpp"
#include "hga/kernels.hpp"
#include "hga/matrix.hpp"

namespace hga {

/// Shape and mixing hyperparameters of the dual adapters.
struct AdapterConfig {
  std::size_t out_dim = 64;   ///< d'
  std::size_t rank_hom = 4;   ///< t
  std::size_t rank_het = 4;   ///< t'
  std::size_t k = 10;         ///< neighbours kept per node in A
  double alpha = 1.0;         ///< weight of the homogeneous residual
  double beta = 1.0;          ///< weight of the heterogeneous residual

  /// Checks ranks against the encoder width `in_dim` (t, t' <= min(d, d')/4).
  void validate(std::size_t in_dim) const;
};

/// Trainable adapter parameters. The homogeneous mapping, the structure
/// projection and the heterogeneous mapping are each stored as a pair of
/// low-rank factors.
struct AdapterState {
  Matrix w_down;        ///< d x t
  Matrix w_up;          ///< t x d'
  Matrix w_theta_down;  ///< d x t
  Matrix w_theta_up;    ///< t x d'
  Matrix theta_down;    ///< d x t'
  Matrix theta_up;      ///< t' x d'
  Matrix w_eps;         ///< d x 1, edge-type score weights
  Matrix w_rho;         ///< 2d' x c, prediction projection
  double alpha = 1.0;
  double beta = 1.0;

  static constexpr std::size_t kNumBlocks = 8;
  static constexpr std::array<std::string_view, kNumBlocks> kBlockNames = {
      "w_down", "w_up", "w_theta_down", "w_theta_up", "theta_down", "theta_up", "w_eps", "w_rho"};

  std::array<Matrix*, kNumBlocks> blocks();
  std::array<const Matrix*, kNumBlocks> blocks() const;

  std::size_t in_dim() const noexcept { return w_down.rows(); }
  std::size_t out_dim() const noexcept { return w_up.cols(); }
  std::size_t num_classes() const noexcept { return w_rho.cols(); }
  std::size_t parameter_count() const;

  bool operator==(const AdapterState&) const = default;
};

/// d*t + t*d' (twice) + d*t' + t'*d' + d + 2d'*c.
constexpr std::size_t analytic_parameter_count(std::size_t d, std::size_t dp, std::size_t t,
                                               std::size_t tp, std::size_t c) {
  return 2 * (d * t + t * dp) + d * tp + tp * dp + d + 2 * dp * c;
}

/// Down factors and the structure projection are drawn N(0, 1/fan_in); the
/// two up factors of the residual mappings start at zero so the adapted
/// representations equal the frozen ones before tuning.
AdapterState init_adapters(std::size_t in_dim, std::size_t num_classes, const AdapterConfig& cfg,
                           std::uint64_t seed);

/// Fixed map from the encoder width d to d': identity when equal, otherwise
/// truncation or zero padding of the columns.
Matrix proj_frozen(const Matrix& frozen, std::size_t out_dim);

/// F = ReLU(Htil W_down W_up).
Matrix map_hom(const Matrix& htil, const AdapterState& state);

/// Rows of Htil projected by the low-rank structure map W_theta.
Matrix structure_projection(const Matrix& htil, const AdapterState& state);

/// Neighbour selection of the learned homogeneous structure: for each node
/// the k most cosine-similar other nodes in the projected space.
struct KnnSelection {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> index;  ///< row-major n x k
};

KnnSelection select_neighbors(const Matrix& projected, std::size_t k);

/// Sparse similarity matrix restricted to a selection plus its symmetrized,
/// rectified form A = (ReLU(At) + ReLU(At)^T) / 2.
struct HomStructure {
  KnnSelection selection;
  std::vector<double> similarity;  ///< At values, aligned with selection.index
  CsrMatrix a;
};

HomStructure hom_structure_from_selection(const Matrix& projected, const KnnSelection& selection);
CsrMatrix symmetrize_rectified(const KnnSelection& selection, const std::vector<double>& values);

/// Selects neighbours in the projected space and builds A.
HomStructure learn_hom_structure(const Matrix& htil, const AdapterState& state, std::size_t k);

struct HomOutput {
  Matrix f;       ///< mapped representations
  Matrix f_adapt; ///< A F
  Matrix z;       ///< proj_frozen(Etil) + alpha * A F
};

HomOutput hom_forward(const Matrix& htil, const Matrix& etil, const AdapterState& state,
                      const CsrMatrix& a);

/// Edge-type scores: masked softmax of Tanh(hhat_r W_eps) over present types.
/// Nodes without any heterogeneous neighbour get an all-zero row.
struct HetScores {
  Matrix s;       ///< n x R
  Matrix logits;  ///< n x R, Tanh outputs (zero where masked)
  std::vector<char> isolated;
};

HetScores learn_het_structure(const std::vector<Matrix>& hhat_typed,
                              const std::vector<std::vector<char>>& mask, const AdapterState& state);

struct HetOutput {
  HetScores scores;
  std::vector<Matrix> m_typed;  ///< ReLU(hhat_r Theta_down Theta_up) per type
  Matrix m_hat;                 ///< sum_r s_r * m_r
  Matrix z;                     ///< proj_frozen(Ehat) + beta * m_hat
};

HetOutput het_forward(const std::vector<Matrix>& hhat_typed, const Matrix& ehat,
                      const std::vector<std::vector<char>>& mask, const AdapterState& state);

struct Prediction {
  Matrix z;  ///< [Ztil | Zhat], n x 2d'
  Matrix p;  ///< Z W_rho, n x c
};

Prediction fuse_and_predict(const Matrix& ztil, const Matrix& zhat, const AdapterState& state);

/// Everything one forward pass produces, kept for the backward pass.
struct ForwardPass {
  Matrix theta_mid;  ///< Htil W_theta_down
  Matrix projected;  ///< theta_mid W_theta_up
  HomStructure hom_structure;
  Matrix f_mid;      ///< Htil W_down
  Matrix f_pre;      ///< f_mid W_up
  HomOutput hom;
  std::vector<Matrix> m_mid;  ///< hhat_r Theta_down
  std::vector<Matrix> m_pre;  ///< m_mid Theta_up
  HetOutput het;
  Prediction pred;
};

ForwardPass forward(const FrozenReps& reps, const AdapterState& state,
                    const KnnSelection& selection);

Checkpoint adapter_checkpoint(const AdapterState& state);
void save_adapters(const AdapterState& state, const std::filesystem::path& path,
                   const nlohmann::json& provenance = nlohmann::json::object());
AdapterState load_adapters(const std::filesystem::path& path);

/// "i,j,weight" rows for every stored entry.
void write_triplets_csv(const CsrMatrix& m, const std::filesystem::path& path);
void write_triplets_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace hga
