// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

// hga: command-line driver for generating data, tuning adapters on a frozen
// encoder, evaluating, ablating and checking gradients.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hga/adapters.hpp"
#include "hga/config.hpp"
#include "hga/encoder.hpp"
#include "hga/eval.hpp"
#include "hga/hetgraph.hpp"
#include "hga/rng.hpp"
#include "hga/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kDiverged = 3 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> structure_refresh;
  std::optional<std::size_t> rec_sample;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file")->required();
  cmd->add_option("--seed", o.seed, "Override trainer.seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--structure-refresh", o.structure_refresh, "Reselect neighbours every T epochs");
  cmd->add_option("--rec-sample", o.rec_sample, "Nodes in the reconstruction loss (0 = all)");
}

hga::RunConfig resolve(const Overrides& o) {
  hga::RunConfig cfg = hga::load_run_config(o.config);
  if (o.seed) cfg.tune.train.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  if (o.structure_refresh) cfg.tune.train.structure_refresh = *o.structure_refresh;
  if (o.rec_sample) cfg.tune.train.rec_sample = *o.rec_sample;
  cfg.validate();
  return cfg;
}

// Resolved config as embedded in artifacts. The output directory is left out
// so that the same run written to two places yields identical files.
json provenance(const hga::RunConfig& cfg) {
  json j = hga::to_json(cfg);
  j.erase("output_dir");
  return j;
}

hga::HetGraph load_data(const hga::RunConfig& cfg) {
  return cfg.dataset ? hga::load_graph(*cfg.dataset) : hga::generate_synthetic(cfg.synthetic);
}

std::uint64_t encoder_seed(const hga::RunConfig& cfg) {
  return hga::derive_seed(cfg.tune.train.seed, "encoder");
}

hga::EncoderParams build_encoder(const hga::RunConfig& cfg, const hga::HetGraph& graph) {
  hga::EncoderParams enc = hga::init_encoder(graph, cfg.encoder.dim, encoder_seed(cfg));
  return hga::pretrain(graph, std::move(enc), cfg.encoder.pretrain_epochs, encoder_seed(cfg),
                       nullptr);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void export_structures(const hga::FrozenReps& reps, const hga::AdapterState& state,
                       const hga::TuneConfig& tc, const fs::path& dir) {
  const hga::ForwardPass fp = hga::forward(
      reps, state,
      hga::select_neighbors(hga::structure_projection(reps.htil, state), tc.adapter.k));
  hga::write_triplets_csv(fp.hom_structure.a, dir / "a.csv");
  hga::write_triplets_csv(fp.het.scores.s, dir / "s.csv");
  std::ofstream z(dir / "z.csv");
  z.precision(17);
  z << "id";
  for (std::size_t k = 0; k < fp.pred.z.cols(); ++k) z << ",z" << k;
  z << '\n';
  for (std::size_t i = 0; i < fp.pred.z.rows(); ++i) {
    z << i;
    for (double v : fp.pred.z.row(i)) z << ',' << v;
    z << '\n';
  }
}

int cmd_gen(const Overrides& o) {
  const json j = hga::parse_json_file(o.config);
  hga::SyntheticSpec spec;
  try {
    spec = hga::synthetic_from_json(j.contains("synthetic") ? j.at("synthetic") : j);
    if (o.seed) spec.seed = *o.seed;
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw hga::ConfigError(e.what());
  }
  const fs::path out = o.out.value_or("data");
  hga::save_graph(hga::generate_synthetic(spec), out);
  std::cout << "wrote " << out.string() << '\n';
  return kOk;
}

int cmd_pretrain(const Overrides& o) {
  const hga::RunConfig cfg = resolve(o);
  const hga::HetGraph graph = load_data(cfg);
  fs::create_directories(cfg.output_dir);
  std::vector<double> trace;
  hga::EncoderParams enc = hga::init_encoder(graph, cfg.encoder.dim, encoder_seed(cfg));
  enc = hga::pretrain(graph, std::move(enc), cfg.encoder.pretrain_epochs, encoder_seed(cfg), &trace);
  hga::save_encoder(enc, cfg.output_dir / "encoder.bin");
  write_json(cfg.output_dir / "config.json", provenance(cfg));
  std::cout << "pretrain reconstruction " << trace.front() << " -> " << trace.back() << '\n';
  return kOk;
}

int cmd_tune(const Overrides& o, const std::optional<std::string>& encoder_path,
             bool record_timing, bool export_csv) {
  const hga::RunConfig cfg = resolve(o);
  const hga::HetGraph graph = load_data(cfg);
  const hga::EncoderParams enc =
      encoder_path ? hga::load_encoder(*encoder_path) : build_encoder(cfg, graph);
  if (!enc.frozen()) throw hga::ConfigError("encoder checkpoint is not frozen");
  const hga::FrozenReps reps = hga::encode(graph, enc);
  const std::string encoder_bytes = enc.bytes();

  const hga::TuneContext ctx = hga::TuneContext::make(graph, reps);
  const hga::TuneConfig& tc = cfg.tune;
  hga::AdapterState init =
      hga::init_adapters(reps.dim(), ctx.num_classes(), tc.adapter, tc.train.seed);
  const hga::TuneResult res = hga::tune_from(ctx, std::move(init), tc, {}, record_timing);
  if (enc.bytes() != encoder_bytes) throw std::logic_error("encoder parameters changed");

  fs::create_directories(cfg.output_dir);
  const json prov = provenance(cfg);
  write_json(cfg.output_dir / "config.json", prov);
  hga::write_history_csv(res.history, cfg.output_dir / "history.csv");
  hga::save_encoder(enc, cfg.output_dir / "encoder.bin");
  hga::save_adapters(res.state, cfg.output_dir / "adapter.bin", prov);

  hga::MetricsReport m = hga::evaluate_model(ctx, res.state, tc);
  m.epochs_run = res.history.size();
  m.diverged = res.diverged;
  json mj = m.to_json();
  mj["config"] = prov;
  write_json(cfg.output_dir / "metrics.json", mj);
  if (export_csv) export_structures(reps, res.state, tc, cfg.output_dir);

  if (res.diverged) {
    std::cerr << "diverged: " << res.message << '\n';
    return kDiverged;
  }
  std::printf("macro_f1 %.4f micro_f1 %.4f nmi %.4f ari %.4f train_err %.4f test_err %.4f\n",
              m.macro_f1, m.micro_f1, m.nmi, m.ari, m.train_error, m.test_error);
  return kOk;
}

int cmd_eval(const Overrides& o, const std::string& run_dir) {
  const hga::RunConfig cfg = resolve(o);
  const hga::HetGraph graph = load_data(cfg);
  const fs::path dir(run_dir);
  const hga::EncoderParams enc = hga::load_encoder(dir / "encoder.bin");
  const hga::AdapterState state = hga::load_adapters(dir / "adapter.bin");
  const hga::FrozenReps reps = hga::encode(graph, enc);
  const hga::TuneContext ctx = hga::TuneContext::make(graph, reps);
  hga::MetricsReport m = hga::evaluate_model(ctx, state, cfg.tune);
  json mj = m.to_json();
  mj["config"] = provenance(cfg);
  const fs::path out = o.out ? fs::path(*o.out) : dir;
  fs::create_directories(out);
  write_json(out / "metrics.json", mj);
  std::cout << mj.dump(2) << '\n';
  return kOk;
}

int cmd_ablate(const Overrides& o, const std::string& grid_arg, std::size_t jobs) {
  const hga::RunConfig cfg = resolve(o);
  json grid;
  if (fs::exists(grid_arg)) {
    grid = hga::parse_json_file(grid_arg);
  } else {
    grid = grid_arg;  // built-in grid name
  }
  std::vector<hga::AblationCell> cells;
  try {
    cells = hga::expand_grid(grid, cfg.tune);
    for (const auto& c : cells) {
      c.cfg.adapter.validate(cfg.encoder.dim);
      c.cfg.loss.validate();
      c.cfg.train.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw hga::ConfigError(e.what());
  }
  const hga::HetGraph graph = load_data(cfg);
  const hga::EncoderParams enc = build_encoder(cfg, graph);
  const hga::FrozenReps reps = hga::encode(graph, enc);
  const auto rows = hga::ablate(graph, reps, cells, jobs);
  fs::create_directories(cfg.output_dir);
  hga::write_ablation_csv(rows, cfg.output_dir / "ablation.csv");
  write_json(cfg.output_dir / "config.json", provenance(cfg));
  for (const auto& r : rows) {
    std::printf("%-28s macro_f1 %.4f gap %+.4f%s\n", r.variant.c_str(), r.macro_f1,
                r.generalization_gap, r.diverged ? " (diverged)" : "");
  }
  return kOk;
}

int cmd_gradcheck(const Overrides& o, const hga::GradCheckOptions& opts) {
  const hga::RunConfig cfg = resolve(o);
  const hga::HetGraph graph = load_data(cfg);
  const hga::EncoderParams enc = build_encoder(cfg, graph);
  const hga::FrozenReps reps = hga::encode(graph, enc);
  const hga::GradCheckReport r = hga::grad_check(graph, reps, cfg.tune, opts);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  const bool ok = r.max_rel_error < 1e-4;
  std::printf("gradcheck probes %zu max_rel_error %.3e worst %s %s\n", r.probes, r.max_rel_error,
              r.worst_param.c_str(), ok ? "OK" : "FAILED");
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual structure adapters for frozen heterogeneous graph encoders"};
  app.require_subcommand(1);

  Overrides o;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset directory");
  add_common(gen, o);

  auto* pre = app.add_subcommand("pretrain", "Pre-train and freeze the encoder");
  add_common(pre, o);

  std::optional<std::string> encoder_path;
  bool record_timing = false, export_csv = false;
  auto* tune = app.add_subcommand("tune", "Tune adapters and evaluate");
  add_common(tune, o);
  tune->add_option("--checkpoint", encoder_path, "Frozen encoder checkpoint to start from");
  tune->add_flag("--record-timing", record_timing, "Fill wall_ms in history.csv");
  tune->add_flag("--export", export_csv, "Write a.csv, s.csv and z.csv");

  std::string run_dir;
  auto* eval = app.add_subcommand("eval", "Evaluate a tuned run directory");
  add_common(eval, o);
  eval->add_option("--checkpoint", run_dir, "Directory holding encoder.bin and adapter.bin")
      ->required();

  std::string grid = "table2";
  std::size_t jobs = 1;
  auto* abl = app.add_subcommand("ablate", "Run an ablation grid");
  add_common(abl, o);
  abl->add_option("--grid", grid, "Grid JSON file or built-in name");
  abl->add_option("--jobs", jobs, "Parallel grid cells")->check(CLI::PositiveNumber);

  hga::GradCheckOptions gc;
  bool corrupt = false;
  auto* chk = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  add_common(chk, o);
  chk->add_option("--probes", gc.n_probes, "Number of probed parameters");
  chk->add_option("--blocks", gc.blocks, "Restrict probes to these parameter blocks");
  chk->add_flag("--corrupt-gradient", corrupt, "Perturb the analytic gradient (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*pre) return cmd_pretrain(o);
    if (*tune) return cmd_tune(o, encoder_path, record_timing, export_csv);
    if (*eval) return cmd_eval(o, run_dir);
    if (*abl) return cmd_ablate(o, grid, jobs);
    if (*chk) {
      if (corrupt) gc.corrupt_scale = 1.01;
      gc.seed = 0;
      return cmd_gradcheck(o, gc);
    }
  } catch (const hga::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const hga::DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}
