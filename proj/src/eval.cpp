// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/eval.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>

#include "hga/kernels.hpp"
#include "hga/rng.hpp"

namespace hga {

using json = nlohmann::json;

Classification classify(const Matrix& p, const Matrix& protos, double tau) {
  const std::size_t n = p.rows(), c = protos.rows();
  Classification out{std::vector<int>(n, 0), Matrix(n, c)};
  std::vector<double> sim(c);
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -INFINITY;
    for (std::size_t y = 0; y < c; ++y) {
      sim[y] = kernels::cosine(p.row(i), protos.row(y)) / tau;
      if (sim[y] > peak) {
        peak = sim[y];
        out.labels[i] = static_cast<int>(y);
      }
    }
    double total = 0.0;
    for (std::size_t y = 0; y < c; ++y) total += out.probs(i, y) = std::exp(sim[y] - peak);
    for (std::size_t y = 0; y < c; ++y) out.probs(i, y) /= total;
  }
  return out;
}

F1Scores f1_scores(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t c) {
  if (pred.size() != truth.size()) throw std::invalid_argument("f1_scores: length mismatch");
  std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) {
      ++tp[static_cast<std::size_t>(truth[i])];
    } else {
      ++fp[static_cast<std::size_t>(pred[i])];
      ++fn[static_cast<std::size_t>(truth[i])];
    }
  }
  auto f1 = [](std::size_t t, std::size_t p, std::size_t n) {
    return t == 0 ? 0.0 : 2.0 * static_cast<double>(t) / static_cast<double>(2 * t + p + n);
  };
  F1Scores out;
  std::size_t st = 0, sp = 0, sn = 0;
  for (std::size_t y = 0; y < c; ++y) {
    out.macro_f1 += f1(tp[y], fp[y], fn[y]);
    st += tp[y];
    sp += fp[y];
    sn += fn[y];
  }
  out.macro_f1 /= static_cast<double>(c);
  out.micro_f1 = f1(st, sp, sn);
  return out;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

KMeansResult lloyd(const Matrix& x, std::size_t k, Rng& rng, std::size_t max_iter) {
  const std::size_t n = x.rows();
  KMeansResult res{std::vector<int>(n, -1), Matrix(k, x.cols()), 0.0};
  // k-means++ seeding.
  std::vector<double> d2(n, INFINITY);
  std::size_t pick = rng.index(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), res.centers.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x.row(i), res.centers.row(c)));
      total += d2[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.index(n);
      continue;
    }
    double target = rng.uniform() * total;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  std::vector<std::size_t> count(k);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(x.row(i), res.centers.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist(x.row(i), res.centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (res.assignment[i] != best) changed = true;
      res.assignment[i] = best;
    }
    if (!changed) break;
    Matrix sums(k, x.cols());
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.assignment[i]);
      ++count[c];
      for (std::size_t f = 0; f < x.cols(); ++f) sums(c, f) += x(i, f);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;  // an empty cluster keeps its centre
      for (std::size_t f = 0; f < x.cols(); ++f)
        res.centers(c, f) = sums(c, f) / static_cast<double>(count[c]);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    res.inertia += sq_dist(x.row(i), res.centers.row(static_cast<std::size_t>(res.assignment[i])));
  return res;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double v : counts)
    if (v > 0.0) h -= (v / n) * std::log(v / n);
  return h;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t restarts,
                    std::size_t max_iter) {
  if (x.rows() == 0) throw std::invalid_argument("kmeans: no points");
  k = std::min(k, x.rows());
  KMeansResult best;
  best.inertia = INFINITY;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    Rng rng(derive_seed(seed, "kmeans", r));
    KMeansResult res = lloyd(x, k, rng, max_iter);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

namespace {

// Contingency counts of two labelings (labels are arbitrary non-negative ints).
struct Contingency {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> a, b;
  double n = 0.0;
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cluster comparison: length mismatch");
  Contingency t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.joint[{a[i], b[i]}] += 1.0;
    t.a[a[i]] += 1.0;
    t.b[b[i]] += 1.0;
  }
  t.n = static_cast<double>(a.size());
  return t;
}

std::vector<double> values_of(const std::map<int, double>& m) {
  std::vector<double> v;
  for (const auto& [k, c] : m) v.push_back(c);
  return v;
}

}  // namespace

double normalized_mutual_info(const std::vector<int>& a, const std::vector<int>& b) {
  const Contingency t = contingency(a, b);
  if (t.n == 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& [key, nij] : t.joint) {
    mi += (nij / t.n) * std::log(t.n * nij / (t.a.at(key.first) * t.b.at(key.second)));
  }
  const double denom = 0.5 * (entropy(values_of(t.a), t.n) + entropy(values_of(t.b), t.n));
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const Contingency t = contingency(a, b);
  auto pairs = [](double v) { return v * (v - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, v] : t.joint) sum_joint += pairs(v);
  for (const auto& [key, v] : t.a) sum_a += pairs(v);
  for (const auto& [key, v] : t.b) sum_b += pairs(v);
  // Pair-confusion form: tp = same/same, fp and fn the two disagreements.
  const double tp = sum_joint;
  const double fn = sum_a - sum_joint;
  const double fp = sum_b - sum_joint;
  const double tn = pairs(t.n) - tp - fn - fp;
  if (fn == 0.0 && fp == 0.0) return 1.0;
  return 2.0 * (tp * tn - fn * fp) / ((tp + fn) * (fn + tn) + (tp + fp) * (fp + tn));
}

ClusterScores cluster_metrics(const Matrix& probs, const std::vector<int>& truth, std::size_t c,
                              std::uint64_t seed) {
  const KMeansResult km = kmeans(probs, c, seed);
  return {normalized_mutual_info(km.assignment, truth), adjusted_rand_index(km.assignment, truth)};
}

double error_rate(const std::vector<int>& pred, const std::vector<int>& truth,
                  const std::vector<std::size_t>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("error_rate: empty split");
  std::size_t wrong = 0;
  for (std::size_t i : nodes)
    if (pred[i] != truth[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(nodes.size());
}

ErrorRates error_rates(const std::vector<int>& pred, const std::vector<int>& truth,
                       const Split& split) {
  ErrorRates out;
  out.train_error = error_rate(pred, truth, split.train);
  out.test_error = error_rate(pred, truth, split.test);
  out.gap = out.test_error - out.train_error;
  return out;
}

json MetricsReport::to_json() const {
  return {{"variant", variant},
          {"macro_f1", macro_f1},
          {"micro_f1", micro_f1},
          {"nmi", nmi},
          {"ari", ari},
          {"train_error", train_error},
          {"test_error", test_error},
          {"generalization_gap", generalization_gap},
          {"final_homophily", final_homophily},
          {"config_fingerprint", config_fingerprint},
          {"seed", seed},
          {"epochs_run", epochs_run},
          {"diverged", diverged}};
}

MetricsReport evaluate_model(const TuneContext& ctx, const AdapterState& state,
                             const TuneConfig& cfg) {
  const HetGraph& g = *ctx.graph;
  const std::size_t c = ctx.num_classes();
  const Matrix projected = structure_projection(ctx.reps->htil, state);
  const ForwardPass fp =
      forward(*ctx.reps, state, select_neighbors(projected, cfg.adapter.k));
  const Classification cls =
      classify(fp.pred.p, class_prototypes_pred(fp.pred.p, ctx.known, c), cfg.loss.tau);

  MetricsReport m;
  std::vector<int> pred_test, truth_test;
  Matrix probs_test(g.split.test.size(), c);
  for (std::size_t t = 0; t < g.split.test.size(); ++t) {
    const std::size_t i = g.split.test[t];
    pred_test.push_back(cls.labels[i]);
    truth_test.push_back(g.labels[i]);
    for (std::size_t y = 0; y < c; ++y) probs_test(t, y) = cls.probs(i, y);
  }
  const F1Scores f1 = f1_scores(pred_test, truth_test, c);
  m.macro_f1 = f1.macro_f1;
  m.micro_f1 = f1.micro_f1;
  const ClusterScores cs =
      cluster_metrics(probs_test, truth_test, c, derive_seed(cfg.train.seed, "eval-kmeans"));
  m.nmi = cs.nmi;
  m.ari = cs.ari;
  const ErrorRates er = error_rates(cls.labels, g.labels, g.split);
  m.train_error = er.train_error;
  m.test_error = er.test_error;
  m.generalization_gap = er.gap;
  try {
    m.final_homophily = homophily_ratio(fp.hom_structure.a, g.labels);
  } catch (const std::invalid_argument&) {
    m.final_homophily = 0.0;
  }
  m.config_fingerprint = config_fingerprint(cfg);
  m.seed = cfg.train.seed;
  return m;
}

void apply_toggle(const std::string& toggle, TuneConfig& cfg) {
  if (toggle == "full") {
  } else if (toggle == "drop_Lcon") {
    cfg.loss.use_contrastive = false;
  } else if (toggle == "drop_Lrec") {
    cfg.loss.eta = 0.0;
  } else if (toggle == "drop_Lmar") {
    cfg.loss.mu = 0.0;
  } else if (toggle == "drop_hom_adapter") {
    cfg.adapter.alpha = 0.0;
  } else if (toggle == "drop_het_adapter") {
    cfg.adapter.beta = 0.0;
  } else if (toggle == "drop_both_adapters") {
    cfg.adapter.alpha = 0.0;
    cfg.adapter.beta = 0.0;
  } else if (toggle == "drop_label_extension") {
    cfg.loss.lambda = 0.0;
    cfg.loss.eta = 0.0;
    cfg.loss.mu = 0.0;
  } else if (toggle == "infonce_margin_variant") {
    cfg.loss.margin_variant = MarginVariant::kInfoNce;
  } else {
    throw std::invalid_argument("unknown ablation toggle '" + toggle + "'");
  }
}

namespace {

void set_parameter(const std::string& key, const json& value, TuneConfig& cfg) {
  try {
    if (key == "alpha") cfg.adapter.alpha = value.get<double>();
    else if (key == "beta") cfg.adapter.beta = value.get<double>();
    else if (key == "k") cfg.adapter.k = value.get<std::size_t>();
    else if (key == "out_dim") cfg.adapter.out_dim = value.get<std::size_t>();
    else if (key == "rank_hom") cfg.adapter.rank_hom = value.get<std::size_t>();
    else if (key == "rank_het") cfg.adapter.rank_het = value.get<std::size_t>();
    else if (key == "lambda") cfg.loss.lambda = value.get<double>();
    else if (key == "tau") cfg.loss.tau = value.get<double>();
    else if (key == "gamma") cfg.loss.gamma = value.get<double>();
    else if (key == "eta") cfg.loss.eta = value.get<double>();
    else if (key == "mu") cfg.loss.mu = value.get<double>();
    else if (key == "lr") cfg.train.lr = value.get<double>();
    else if (key == "epochs") cfg.train.epochs = value.get<std::size_t>();
    else if (key == "structure_refresh") cfg.train.structure_refresh = value.get<std::size_t>();
    else if (key == "rec_sample") cfg.train.rec_sample = value.get<std::size_t>();
    else throw std::invalid_argument("unknown ablation parameter '" + key + "'");
  } catch (const json::exception& e) {
    throw std::invalid_argument("ablation parameter '" + key + "': " + e.what());
  }
}

std::string format_value(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

AblationCell from_variant_string(const std::string& name, const TuneConfig& base) {
  AblationCell cell{name, base};
  std::size_t start = 0;
  while (start <= name.size()) {
    const std::size_t end = std::min(name.find('+', start), name.size());
    apply_toggle(name.substr(start, end - start), cell.cfg);
    start = end + 1;
  }
  return cell;
}

json builtin_grid(const std::string& name) {
  if (name == "table2") {
    return json::array({"drop_Lcon+drop_Lrec", "drop_Lcon+drop_Lmar", "drop_Lrec+drop_Lmar",
                        "drop_Lcon", "drop_Lrec", "drop_Lmar", "full"});
  }
  if (name == "adapters") {
    return json::array(
        {"full", "drop_hom_adapter", "drop_het_adapter", "drop_both_adapters"});
  }
  if (name == "label_extension") return json::array({"full", "drop_label_extension"});
  if (name == "infonce") return json::array({"full", "infonce_margin_variant"});
  if (name == "sweep") {
    json cells = json::array();
    for (const char* key : {"alpha", "beta", "eta", "mu"}) {
      for (double v : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}) {
        cells.push_back({{"name", std::string(key) + "=" + format_value(v)},
                         {"set", {{key, v}}}});
      }
    }
    return cells;
  }
  throw std::invalid_argument("unknown built-in grid '" + name + "'");
}

}  // namespace

std::vector<AblationCell> expand_grid(const json& grid, const TuneConfig& base) {
  if (grid.is_string()) return expand_grid(builtin_grid(grid.get<std::string>()), base);
  if (grid.is_object() && grid.contains("grid")) return expand_grid(grid.at("grid"), base);
  if (!grid.is_array()) throw std::invalid_argument("ablation grid: expected an array");
  std::vector<AblationCell> cells;
  for (const auto& entry : grid) {
    if (entry.is_string()) {
      cells.push_back(from_variant_string(entry.get<std::string>(), base));
      continue;
    }
    if (!entry.is_object() || !entry.contains("name"))
      throw std::invalid_argument("ablation grid: each entry needs a name");
    AblationCell cell{entry.at("name").get<std::string>(), base};
    for (const auto& [key, value] : entry.items()) {
      if (key != "name" && key != "toggles" && key != "set")
        throw std::invalid_argument("ablation grid: unknown key '" + key + "'");
    }
    if (entry.contains("toggles"))
      for (const auto& t : entry.at("toggles")) apply_toggle(t.get<std::string>(), cell.cfg);
    if (entry.contains("set"))
      for (const auto& [key, value] : entry.at("set").items()) set_parameter(key, value, cell.cfg);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<MetricsReport> ablate(const HetGraph& graph, const FrozenReps& reps,
                                  const std::vector<AblationCell>& cells, std::size_t jobs) {
  const TuneContext ctx = TuneContext::make(graph, reps);
  std::vector<MetricsReport> out(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  const int threads = static_cast<int>(std::max<std::size_t>(jobs, 1));
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      const AblationCell& cell = cells[i];
      AdapterState init =
          init_adapters(reps.dim(), ctx.num_classes(), cell.cfg.adapter, cell.cfg.train.seed);
      const TuneResult res = tune_from(ctx, std::move(init), cell.cfg);
      out[i] = evaluate_model(ctx, res.state, cell.cfg);
      out[i].variant = cell.variant;
      out[i].epochs_run = res.history.size();
      out[i].diverged = res.diverged;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_ablation_csv(const std::vector<MetricsReport>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "variant,macro_f1,micro_f1,nmi,ari,train_err,test_err,gap,homophily,seed\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << format_value(r.macro_f1) << ',' << format_value(r.micro_f1) << ','
        << format_value(r.nmi) << ',' << format_value(r.ari) << ','
        << format_value(r.train_error) << ',' << format_value(r.test_error) << ','
        << format_value(r.generalization_gap) << ',' << format_value(r.final_homophily) << ','
        << r.seed << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace hga
