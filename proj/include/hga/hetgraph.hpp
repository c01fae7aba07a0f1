// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hga/matrix.hpp"

namespace hga {

/// Label value for target nodes without a class.
inline constexpr int kUnlabeled = -1;

/// Raised for malformed dataset directories; the message names the file and row.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EdgeType {
  std::string name;
  std::string src;
  std::string dst;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  bool operator==(const EdgeType&) const = default;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  bool operator==(const Split&) const = default;
};

/// Typed nodes with per-type features, typed edge lists, a homogeneous
/// structure over the target type, labels and a train/test split.
struct HetGraph {
  std::vector<std::string> node_types;
  std::string target_type;
  std::map<std::string, Matrix> features;
  std::vector<EdgeType> edge_types;
  /// Symmetric 0/1 adjacency over target nodes with an empty diagonal.
  CsrMatrix hom_adjacency;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  Split split;

  std::size_t num_nodes(const std::string& type) const;
  std::size_t num_targets() const { return num_nodes(target_type); }
  const Matrix& target_features() const { return features.at(target_type); }

  /// Throws DatasetError on the first violated invariant.
  void validate() const;

  bool operator==(const HetGraph& other) const;
};

/// Parameters of the planted-partition generator.
struct SyntheticSpec {
  std::size_t n_target = 600;
  std::size_t num_classes = 3;
  std::size_t feature_dim = 32;
  /// Distance between class feature means in units of the noise deviation.
  double feature_separation = 1.0;
  std::size_t aux_types = 2;
  std::size_t aux_nodes = 90;
  std::size_t aux_feature_dim = 16;
  /// Heterogeneous neighbours drawn per target node and auxiliary type.
  std::size_t aux_degree = 3;
  /// Probability that a link of the informative auxiliary type stays inside
  /// the target's class. The remaining auxiliary types are wired at random.
  double aux_class_affinity = 0.8;
  double p_in = 0.05;
  double p_out = 0.005;
  /// Fraction of planted homogeneous edges rewired to a uniformly random endpoint.
  double hom_noise = 0.0;
  std::size_t labeled_per_class = 20;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on an inconsistent spec.
  void validate() const;
};

HetGraph load_graph(const std::filesystem::path& dir);
void save_graph(const HetGraph& graph, const std::filesystem::path& dir);
HetGraph generate_synthetic(const SyntheticSpec& spec);

/// Fraction of edge weight joining same-class endpoints. Edges touching an
/// unlabeled node are ignored. Throws std::invalid_argument when no weighted
/// edge remains.
double homophily_ratio(const CsrMatrix& weighted_adj, const std::vector<int>& labels);

}  // namespace hga
