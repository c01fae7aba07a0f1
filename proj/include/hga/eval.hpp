// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hga/config.hpp"
#include "hga/trainer.hpp"
#include "json.hpp"

namespace hga {

struct Classification {
  std::vector<int> labels;
  Matrix probs;  ///< n x c
};

/// Softmax over classes of cos(p_i, C_pred[y]) / tau; label is the argmax with
/// ties going to the smallest class index.
Classification classify(const Matrix& p, const Matrix& protos, double tau);

struct F1Scores {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

/// Per-class F1 averaged unweighted (macro) and from global counts (micro).
/// A class with no true positives gets F1 = 0.
F1Scores f1_scores(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t c);

struct KMeansResult {
  std::vector<int> assignment;
  Matrix centers;
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeding; the best of `restarts` runs by
/// inertia.
KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t restarts = 10,
                    std::size_t max_iter = 300);

/// Mutual information over the arithmetic mean of the two entropies; 0 when
/// both partitions are a single block.
double normalized_mutual_info(const std::vector<int>& a, const std::vector<int>& b);
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct ClusterScores {
  double nmi = 0.0;
  double ari = 0.0;
};

ClusterScores cluster_metrics(const Matrix& probs, const std::vector<int>& truth, std::size_t c,
                              std::uint64_t seed);

struct ErrorRates {
  double train_error = 0.0;
  double test_error = 0.0;
  double gap = 0.0;  ///< test_error - train_error
};

/// Misclassification fraction over `nodes`; throws on an empty split.
double error_rate(const std::vector<int>& pred, const std::vector<int>& truth,
                  const std::vector<std::size_t>& nodes);
ErrorRates error_rates(const std::vector<int>& pred, const std::vector<int>& truth,
                       const Split& split);

struct MetricsReport {
  std::string variant = "full";
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  double generalization_gap = 0.0;
  double final_homophily = 0.0;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  bool diverged = false;

  nlohmann::json to_json() const;
};

/// Classifies every target node with the final state (fresh neighbour
/// selection) and scores the test split.
MetricsReport evaluate_model(const TuneContext& ctx, const AdapterState& state,
                             const TuneConfig& cfg);

struct AblationCell {
  std::string variant;
  TuneConfig cfg;
};

/// Toggles: drop_Lcon, drop_Lrec, drop_Lmar, drop_hom_adapter,
/// drop_het_adapter, drop_both_adapters, drop_label_extension,
/// infonce_margin_variant. Throws std::invalid_argument on an unknown name.
void apply_toggle(const std::string& toggle, TuneConfig& cfg);

/// A grid is either a built-in name ("table2", "adapters", "label_extension",
/// "infonce", "sweep") or an array whose entries are variant strings
/// ("full", or toggles joined by '+') or objects
/// {"name": ..., "toggles": [...], "set": {...}}.
std::vector<AblationCell> expand_grid(const nlohmann::json& grid, const TuneConfig& base);

/// One tune + evaluate per cell; every cell uses the base seed. Cells run on
/// up to `jobs` threads and the output order follows the grid.
std::vector<MetricsReport> ablate(const HetGraph& graph, const FrozenReps& reps,
                                  const std::vector<AblationCell>& cells, std::size_t jobs = 1);

void write_ablation_csv(const std::vector<MetricsReport>& rows, const std::filesystem::path& path);

}  // namespace hga
