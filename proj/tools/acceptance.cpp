// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance harness: one PASS/FAIL line per criterion.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hga/config.hpp"
#include "hga/encoder.hpp"
#include "hga/eval.hpp"

namespace fs = std::filesystem;
using hga::Matrix;

namespace {

struct Verdict {
  int id;
  std::string title;
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

hga::EncoderParams frozen_encoder(const hga::RunConfig& cfg, const hga::HetGraph& g) {
  const std::uint64_t seed = hga::derive_seed(cfg.tune.train.seed, "encoder");
  return hga::pretrain(g, hga::init_encoder(g, cfg.encoder.dim, seed), cfg.encoder.pretrain_epochs,
                       seed);
}

// ---- criterion 1 and 9: through the executable -----------------------------

Verdict gradient_check(const std::string& hga_bin, const fs::path& tiny) {
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = run(hga_bin + " gradcheck --probes 1000 --config " + tiny.string());
  const double secs = seconds_since(t0);
  // Same check in-process, to report the error itself.
  const hga::RunConfig cfg = hga::load_run_config(tiny);
  const hga::HetGraph g = hga::generate_synthetic(cfg.synthetic);
  const hga::FrozenReps reps = hga::encode(g, frozen_encoder(cfg, g));
  hga::GradCheckOptions opts;
  opts.n_probes = 1000;
  const hga::GradCheckReport r = hga::grad_check(g, reps, cfg.tune, opts);
  return {1, "gradient correctness", rc == 0 && r.max_rel_error < 1e-4 && secs < 5.0,
          fmt("exit %d, max_rel_error %.2e over %zu probes, %.2f s", rc, r.max_rel_error, r.probes,
              secs)};
}

Verdict determinism(const std::string& hga_bin, const fs::path& config, const fs::path& work) {
  std::vector<fs::path> dirs{work / "det1", work / "det2"};
  for (const auto& d : dirs) {
    fs::remove_all(d);
    if (run(hga_bin + " tune --config " + config.string() + " --out " + d.string()) != 0)
      return {9, "determinism", false, "tune failed in " + d.string()};
  }
  bool same = true;
  for (const char* f : {"metrics.json", "history.csv"}) {
    const std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
    same = same && !a.empty() && a == b;
  }
  return {9, "determinism", same, same ? "metrics.json and history.csv byte-identical"
                                       : "artifacts differ"};
}

// ---- criteria 2-8: five seeds on the default synthetic graph -----------------

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool invariants = true;
  std::string violation;
  bool j_fell = false;
  double h_first = 0, h_last = 0, seconds = 0;
  bool encoder_unchanged = false;
  std::map<std::string, hga::MetricsReport> rows;
};

void check_structures(const hga::TuneConfig& cfg, const hga::ObjectiveEval& ev, SeedOutcome& out,
                      std::size_t epoch) {
  if (!out.invariants) return;
  const hga::CsrMatrix& a = ev.fp.hom_structure.a;
  const std::size_t n = a.rows;
  auto fail = [&](const std::string& what) {
    out.invariants = false;
    out.violation = "epoch " + std::to_string(epoch) + ": " + what;
  };
  if (a.nnz() > 2 * cfg.adapter.k * n) return fail("nnz(A) > 2kn");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      if (!(a.values[e] >= 0.0)) return fail("negative entry in A");
      if (a.at(a.col_idx[e], i) != a.values[e]) return fail("A not symmetric");
    }
  }
  const hga::HetScores& sc = ev.fp.het.scores;
  for (std::size_t i = 0; i < sc.s.rows(); ++i) {
    if (sc.isolated[i]) continue;
    double sum = 0.0;
    for (double v : sc.s.row(i)) sum += v;
    if (std::abs(sum - 1.0) > 1e-12) return fail("S row does not sum to 1");
  }
}

SeedOutcome run_seed(const hga::RunConfig& base, std::uint64_t seed) {
  hga::RunConfig cfg = base;
  cfg.synthetic.seed = seed;
  cfg.tune.train.seed = seed;
  SeedOutcome out;
  out.seed = seed;
  const hga::HetGraph g = hga::generate_synthetic(cfg.synthetic);
  const hga::EncoderParams enc = frozen_encoder(cfg, g);
  const std::string enc_bytes = enc.bytes();
  const hga::FrozenReps reps = hga::encode(g, enc);
  const hga::TuneContext ctx = hga::TuneContext::make(g, reps);

  const auto t0 = std::chrono::steady_clock::now();
  const hga::TuneResult full = hga::tune(
      g, reps, cfg.tune,
      [&](const hga::EpochRecord& rec, const hga::ObjectiveEval& ev, const hga::StepStructure&) {
        check_structures(cfg.tune, ev, out, rec.epoch);
      });
  out.seconds = seconds_since(t0);
  out.encoder_unchanged = enc.bytes() == enc_bytes;
  if (full.diverged || full.history.empty()) {
    out.invariants = false;
    out.violation = full.diverged ? full.message : "no epochs";
    return out;
  }
  out.h_first = full.history.front().homophily;
  out.h_last = full.history.back().homophily;
  out.j_fell = full.history.back().j < full.history.front().j;
  out.rows["full"] = hga::evaluate_model(ctx, full.state, cfg.tune);

  const nlohmann::json grid = nlohmann::json::parse(R"([
      {"name": "e0", "set": {"epochs": 0}},
      "drop_Lcon", "drop_Lrec", "drop_Lmar", "drop_both_adapters", "drop_label_extension"])");
  const auto rows = hga::ablate(g, reps, hga::expand_grid(grid, cfg.tune));
  for (const auto& r : rows) out.rows[r.variant] = r;
  return out;
}

std::vector<Verdict> seed_criteria(const std::vector<SeedOutcome>& seeds) {
  const std::size_t total = seeds.size();
  const std::size_t need = total == 5 ? 4 : total;
  std::size_t inv = 0, fell = 0, enc = 0, c4 = 0, c5 = 0, c6 = 0, c7 = 0, c8 = 0;
  double slowest = 0.0;
  std::string first_violation;
  for (const auto& s : seeds) {
    inv += s.invariants;
    if (!s.invariants && first_violation.empty()) first_violation = s.violation;
    fell += s.j_fell;
    enc += s.encoder_unchanged;
    slowest = std::max(slowest, s.seconds);
    if (s.rows.size() < 7) continue;
    const auto& full = s.rows.at("full");
    c4 += s.h_last >= s.h_first + 0.15 && s.h_last >= 0.75;
    c5 += full.train_error <= s.rows.at("drop_both_adapters").train_error;
    c6 += full.generalization_gap <= s.rows.at("drop_label_extension").generalization_gap;
    const double con = s.rows.at("drop_Lcon").macro_f1, rec = s.rows.at("drop_Lrec").macro_f1,
                 mar = s.rows.at("drop_Lmar").macro_f1;
    c7 += full.macro_f1 >= std::max({con, rec, mar}) - 0.01 && con <= std::min(rec, mar);
    c8 += full.macro_f1 >= s.rows.at("e0").macro_f1 + 0.05;
  }
  auto count = [&](std::size_t k) { return fmt("%zu/%zu seeds", k, total); };
  return {
      {2, "structural invariants", inv == total && fell == total,
       count(inv) + " clean over every epoch" +
           (first_violation.empty() ? "" : " (" + first_violation + ")") + "; J(final) < J(1) in " +
           count(fell)},
      {3, "frozen-encoder invariance", enc == total, "encoder bytes unchanged in " + count(enc)},
      {4, "homophily growth", c4 >= need && slowest < 120.0,
       count(c4) + fmt(", slowest full run %.1f s", slowest)},
      {5, "structure-tuning ablation", c5 >= need, count(c5)},
      {6, "label-extension ablation", c6 >= need, count(c6)},
      {7, "objective-component ordering", c7 >= need, count(c7)},
      {8, "downstream-task lift", c8 >= need, count(c8)},
  };
}

void print_seed_table(const std::vector<SeedOutcome>& seeds) {
  std::printf("  seed  h(1)  h(E)   F1 full  e0     -Lcon  -Lrec  -Lmar  | train full/noadapt"
              " | gap full/noext\n");
  for (const auto& s : seeds) {
    if (s.rows.size() < 7) {
      std::printf("  %4llu  run failed: %s\n", static_cast<unsigned long long>(s.seed),
                  s.violation.c_str());
      continue;
    }
    const auto& r = s.rows;
    std::printf("  %4llu  %.3f %.3f  %.4f   %.4f %.4f %.4f %.4f | %.4f/%.4f | %.4f/%.4f\n",
                static_cast<unsigned long long>(s.seed), s.h_first, s.h_last,
                r.at("full").macro_f1, r.at("e0").macro_f1, r.at("drop_Lcon").macro_f1,
                r.at("drop_Lrec").macro_f1, r.at("drop_Lmar").macro_f1, r.at("full").train_error,
                r.at("drop_both_adapters").train_error, r.at("full").generalization_gap,
                r.at("drop_label_extension").generalization_gap);
  }
}

// ---- criterion 10: hand-computed loss instances -----------------------------

Verdict loss_oracles() {
  std::vector<std::string> bad;
  auto expect = [&](const char* what, double got, double want) {
    if (!(std::abs(got - want) <= 1e-10)) bad.push_back(fmt("%s %.12g vs %.12g", what, got, want));
  };
  hga::LossWeights w;
  w.tau = 1.0;
  // Two classes: sim to own prototype 1, to the other 0.
  const Matrix p(1, 2, std::vector<double>{1, 0});
  const Matrix protos(2, 2, std::vector<double>{1, 0, 0, 1});
  expect("contrastive", hga::contrastive_loss(p, protos, {0}, {1}, w).value,
         -std::log(std::exp(1.0) / std::exp(0.0)));
  // Two one-hot nodes joined with equal weight: each reconstruction is uniform.
  const Matrix xb = hga::normalize_feature_rows(Matrix(2, 2, std::vector<double>{1, 0, 0, 1}));
  const hga::CsrMatrix a = hga::csr_from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
  expect("reconstruction", hga::reconstruction_loss(a, xb, {0, 1}).value,
         -2.0 * std::log(0.5 + hga::kLogEps));
  // Hinge with squared distances (1, 4) and (4, 1), gamma 2.
  const Matrix cp(2, 1, std::vector<double>{0, 10});
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}};
  expect("hinge 1,4", hga::margin_loss(cp, Matrix(2, 1, std::vector<double>{1, 2}), {0, 1}, pairs, 2)
                          .value,
         std::max(0.0, 1.0 - 4.0 + 2.0));
  expect("hinge 4,1", hga::margin_loss(cp, Matrix(2, 1, std::vector<double>{2, 1}), {0, 1}, pairs, 2)
                          .value,
         std::max(0.0, 4.0 - 1.0 + 2.0));
  hga::LossWeights t;
  t.eta = 0.5;
  t.mu = 2.0;
  expect("total", hga::total_objective({1, 2, 3}, t), 1.0 + 0.5 * 2.0 + 2.0 * 3.0);
  std::string detail = "5 instances within 1e-10";
  if (!bad.empty()) detail = bad.front();
  return {10, "oracle equivalences", bad.empty(), detail};
}

// ---- criterion 11: metrics against brute force --------------------------------

double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
  double ss = 0, sd = 0, ds = 0, dd = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      (sa && sb ? ss : sa ? sd : sb ? ds : dd) += 1;
    }
  const double den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
  return den == 0.0 ? 1.0 : 2.0 * (ss * dd - sd * ds) / den;
}

double nmi_direct(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1 / n;
    pb[b[i]] += 1 / n;
    pab[{a[i], b[i]}] += 1 / n;
  }
  double ha = 0, hb = 0, mi = 0;
  for (auto [k, v] : pa) ha -= v * std::log(v);
  for (auto [k, v] : pb) hb -= v * std::log(v);
  for (auto [k, v] : pab) mi += v * std::log(v / (pa[k.first] * pb[k.second]));
  return ha + hb == 0.0 ? 0.0 : mi / (0.5 * (ha + hb));
}

Verdict metric_oracles() {
  std::vector<std::string> bad;
  hga::Rng rng(2026);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> pred(20), truth(20);
    for (int i = 0; i < 20; ++i) {
      pred[i] = static_cast<int>(rng.index(3));
      truth[i] = static_cast<int>(rng.index(3));
    }
    double macro = 0.0;
    std::size_t correct = 0;
    for (int k = 0; k < 3; ++k) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (int i = 0; i < 20; ++i) {
        tp += pred[i] == k && truth[i] == k;
        fp += pred[i] == k && truth[i] != k;
        fn += pred[i] != k && truth[i] == k;
      }
      if (tp) macro += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    }
    for (int i = 0; i < 20; ++i) correct += pred[i] == truth[i];
    const hga::F1Scores f = hga::f1_scores(pred, truth, 3);
    if (f.macro_f1 != macro / 3 || f.micro_f1 != correct / 20.0) bad.push_back("f1");
    if (std::abs(hga::normalized_mutual_info(pred, truth) - nmi_direct(pred, truth)) > 1e-9)
      bad.push_back("nmi");
    if (std::abs(hga::adjusted_rand_index(pred, truth) - ari_pairs(pred, truth)) > 1e-9)
      bad.push_back("ari");
  }

  // Two probability clouds, truth with three flipped labels.
  Matrix probs(20, 2);
  std::vector<int> truth(20);
  for (std::size_t i = 0; i < 20; ++i) {
    const bool hi = i >= 10;
    probs(i, 0) = (hi ? 0.2 : 0.85) + rng.uniform(-0.05, 0.05);
    probs(i, 1) = 1.0 - probs(i, 0);
    truth[i] = hi ? 1 : 0;
  }
  truth[0] = 1;
  truth[11] = 0;
  truth[12] = 0;
  double best = INFINITY;
  std::vector<int> best_part;
  for (std::uint32_t mask = 0; mask < (1u << 19); ++mask) {
    std::vector<int> part(20, 0);
    double sum[2][2] = {}, cnt[2] = {};
    for (std::size_t i = 1; i < 20; ++i) part[i] = (mask >> (i - 1)) & 1u;
    for (std::size_t i = 0; i < 20; ++i) {
      cnt[part[i]] += 1;
      sum[part[i]][0] += probs(i, 0);
      sum[part[i]][1] += probs(i, 1);
    }
    if (cnt[1] == 0) continue;
    double inertia = 0;
    for (std::size_t i = 0; i < 20; ++i)
      for (int d = 0; d < 2; ++d) {
        const double diff = probs(i, d) - sum[part[i]][d] / cnt[part[i]];
        inertia += diff * diff;
      }
    if (inertia < best) {
      best = inertia;
      best_part = part;
    }
  }
  const hga::ClusterScores cs = hga::cluster_metrics(probs, truth, 2, 7);
  const double nmi = nmi_direct(best_part, truth), ari = ari_pairs(best_part, truth);
  if (std::abs(cs.nmi - nmi) > 1e-9 || std::abs(cs.ari - ari) > 1e-9)
    bad.push_back(fmt("cluster nmi %.12f vs %.12f, ari %.12f vs %.12f", cs.nmi, nmi, cs.ari, ari));
  return {11, "evaluation metrics", bad.empty(),
          bad.empty() ? fmt("50 random 20-point instances; clustering nmi %.6f ari %.6f", nmi, ari)
                      : bad.front()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string hga_bin = HGA_BINARY;
  fs::path source = HGA_SOURCE_DIR;
  fs::path work = fs::temp_directory_path() / "hga_acceptance";
  std::size_t seeds = 5;
  app.add_option("--hga", hga_bin, "hga executable");
  app.add_option("--source", source, "Source tree holding configs/");
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--seeds", seeds, "Seeds for the synthetic criteria")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const fs::path tiny = source / "configs" / "tiny.json";
  const fs::path def = source / "configs" / "default.json";
  std::vector<Verdict> verdicts;
  verdicts.push_back(gradient_check(hga_bin, tiny));

  const hga::RunConfig base = hga::load_run_config(def);
  std::vector<SeedOutcome> outcomes;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    outcomes.push_back(run_seed(base, s));
    std::fprintf(stderr, "seed %llu done (%.1f s)\n", static_cast<unsigned long long>(s),
                 outcomes.back().seconds);
  }
  print_seed_table(outcomes);
  for (auto& v : seed_criteria(outcomes)) verdicts.push_back(std::move(v));
  verdicts.push_back(determinism(hga_bin, def, work));
  verdicts.push_back(loss_oracles());
  verdicts.push_back(metric_oracles());

  std::sort(verdicts.begin(), verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  bool all = true;
  for (const auto& v : verdicts) {
    std::printf("%s  %2d %-30s %s\n", v.pass ? "PASS" : "FAIL", v.id, v.title.c_str(),
                v.detail.c_str());
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
