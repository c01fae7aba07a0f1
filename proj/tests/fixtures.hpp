// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "hga/hetgraph.hpp"
#include "hga/matrix.hpp"
#include "hga/rng.hpp"

namespace hga::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hga_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// The 12-node reference instance used for gradient checks.
inline SyntheticSpec tiny_spec() {
  SyntheticSpec s;
  s.n_target = 12;
  s.num_classes = 2;
  s.feature_dim = 8;
  s.aux_types = 2;
  s.aux_nodes = 6;
  s.aux_feature_dim = 8;
  s.aux_degree = 2;
  s.p_in = 0.5;
  s.p_out = 0.1;
  s.labeled_per_class = 2;
  s.seed = 7;
  return s;
}

}  // namespace hga::test
