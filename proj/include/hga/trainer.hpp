// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hga/adapters.hpp"
#include "hga/encoder.hpp"
#include "hga/hetgraph.hpp"
#include "hga/objective.hpp"

namespace hga {

struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  std::size_t structure_refresh = 1;  ///< reselect kNN neighbours every T epochs
  std::size_t rec_sample = 0;         ///< nodes in the reconstruction loss; 0 = all

  void validate() const;
};

struct TuneConfig {
  AdapterConfig adapter;
  LossWeights loss;
  TrainConfig train;
};

/// One trainable block inside the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const noexcept { return rows * cols; }
};

struct GradSpec {
  std::vector<ParamBlock> catalog;
  std::vector<double> grad;  ///< aligned with the catalog
};

std::vector<ParamBlock> param_catalog(const AdapterState& state);
std::size_t catalog_size(const std::vector<ParamBlock>& catalog);
/// Index of the block holding flat position `index`.
const ParamBlock& block_of(const std::vector<ParamBlock>& catalog, std::size_t index);

std::vector<double> flatten(const AdapterState& state);
void unflatten(std::span<const double> flat, AdapterState& state);

class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws NonFiniteGradientError naming the first parameter whose gradient is
/// not finite.
void require_finite(const GradSpec& g);

/// Central difference (f(x + h e_i) - f(x - h e_i)) / 2h.
double central_difference(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> x, std::size_t index, double h = 1e-5);

/// Inputs shared by every step of one tuning run.
struct TuneContext {
  const HetGraph* graph = nullptr;
  const FrozenReps* reps = nullptr;
  Matrix x_bar;              ///< row-stochastic target features
  std::vector<int> known;    ///< train labels, -1 elsewhere
  std::vector<char> labeled; ///< 1 on train nodes

  static TuneContext make(const HetGraph& graph, const FrozenReps& reps);
  std::size_t num_classes() const { return static_cast<std::size_t>(graph->num_classes); }
};

/// Discrete choices held fixed within one gradient step.
struct StepStructure {
  KnnSelection selection;
  std::vector<int> hard;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> rec_sample;
};

StepStructure prepare_step(const TuneContext& ctx, const AdapterState& state,
                           const TuneConfig& cfg, std::size_t epoch,
                           const KnnSelection* reuse = nullptr);

struct ObjectiveEval {
  double j = 0.0;
  LossParts parts;
  bool margin_degenerate = false;
  ForwardPass fp;
  Matrix protos_pred;
  GradSpec grad;  ///< empty unless requested
};

/// Forward pass and J with the structure fixed; the gradient w.r.t. every
/// adapter parameter when `with_grad`.
ObjectiveEval evaluate_objective(const TuneContext& ctx, const AdapterState& state,
                                 const StepStructure& structure, const LossWeights& weights,
                                 bool with_grad);

struct EpochRecord {
  std::size_t epoch = 0;
  double l_con = 0.0;
  double l_rec = 0.0;
  double l_mar = 0.0;
  double j = 0.0;
  double train_err = 0.0;
  double test_err = 0.0;
  double homophily = 0.0;
  double wall_ms = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

/// Called once per epoch after the update, with the pre-update evaluation.
using EpochObserver =
    std::function<void(const EpochRecord&, const ObjectiveEval&, const StepStructure&)>;

struct TuneResult {
  AdapterState state;
  TrainHistory history;
  bool diverged = false;
  std::string message;
};

TuneResult tune(const HetGraph& graph, const FrozenReps& reps, const TuneConfig& cfg,
                const EpochObserver& observer = {}, bool record_timing = false);

/// Same as tune but starting from a given state.
TuneResult tune_from(const TuneContext& ctx, AdapterState state, const TuneConfig& cfg,
                     const EpochObserver& observer = {}, bool record_timing = false);

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

struct GradCheckOptions {
  std::size_t n_probes = 64;
  std::uint64_t seed = 0;
  double step = 1e-5;
  /// Restrict probes to these blocks; every name must be in the catalog.
  std::vector<std::string> blocks;
  /// Scale applied to the analytic gradient (test hook; 1 = untouched).
  double corrupt_scale = 1.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  std::string worst_param;
  std::vector<std::string> warnings;
};

/// Compares analytic and central-difference gradients of J at a generic
/// point: the zero-initialized up factors are replaced by small random values
/// so no ReLU sits exactly on its kink.
GradCheckReport grad_check(const HetGraph& graph, const FrozenReps& reps, const TuneConfig& cfg,
                           const GradCheckOptions& opts);

}  // namespace hga
