// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hga/hetgraph.hpp"
#include "hga/matrix.hpp"

namespace hga {

/// Raised on any attempt to modify encoder weights after freezing.
class FrozenParameterError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Weights of the two-branch surrogate encoder: a one-layer MLP for the
/// homogeneous branch (target features) and one per node type for the
/// heterogeneous branch. Read access is always allowed; write access is
/// refused once frozen.
class EncoderParams {
 public:
  EncoderParams() = default;

  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  const Matrix& hom_mlp() const noexcept { return hom_mlp_; }
  const Matrix& het_mlp(const std::string& type) const { return het_mlp_.at(type); }
  const std::map<std::string, Matrix>& het_mlps() const noexcept { return het_mlp_; }

  Matrix& mutable_hom_mlp();
  Matrix& mutable_het_mlp(const std::string& type);

  /// Exact serialized image (header + weights); used for byte-equality checks.
  std::string bytes() const;

  friend EncoderParams init_encoder(const HetGraph& graph, std::size_t d, std::uint64_t seed);
  friend EncoderParams load_encoder(const std::filesystem::path& path);

 private:
  std::size_t hidden_dim_ = 0;
  std::uint64_t seed_ = 0;
  bool frozen_ = false;
  Matrix hom_mlp_;
  std::map<std::string, Matrix> het_mlp_;
};

/// Frozen encoder outputs over the n target nodes.
struct FrozenReps {
  Matrix htil;  ///< before homogeneous message passing
  Matrix etil;  ///< after homogeneous message passing
  /// Mean-pooled mapped representation of each node's neighbours through
  /// each target-incident edge type; zero rows where the mask is false.
  std::vector<Matrix> hhat_typed;
  std::vector<std::vector<char>> neighbor_mask;
  std::vector<std::string> edge_type_names;
  Matrix ehat;  ///< heterogeneous-branch output

  std::size_t num_nodes() const noexcept { return htil.rows(); }
  std::size_t dim() const noexcept { return htil.cols(); }
  std::size_t num_edge_types() const noexcept { return hhat_typed.size(); }
};

/// Weights uniform in [-1/sqrt(f), 1/sqrt(f)] per input dimension f.
EncoderParams init_encoder(const HetGraph& graph, std::size_t d, std::uint64_t seed);

/// Optional unsupervised warm-up: fits each branch's MLP jointly with a
/// throw-away linear decoder to reconstruct the raw features, then freezes.
/// `objective_trace`, when given, receives the reconstruction error before
/// every update and after the last one.
EncoderParams pretrain(const HetGraph& graph, EncoderParams params, std::size_t epochs,
                       std::uint64_t seed, std::vector<double>* objective_trace = nullptr);

FrozenReps encode(const HetGraph& graph, const EncoderParams& params);

void save_encoder(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_encoder(const std::filesystem::path& path);

}  // namespace hga
