// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/trainer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hga/adam.hpp"
#include "hga/eval.hpp"
#include "hga/kernels.hpp"
#include "hga/rng.hpp"

namespace hga {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train: lr must be >= 0");
  if (structure_refresh == 0) throw std::invalid_argument("train: structure_refresh must be >= 1");
}

std::vector<ParamBlock> param_catalog(const AdapterState& state) {
  std::vector<ParamBlock> out;
  std::size_t offset = 0;
  const auto blocks = state.blocks();
  for (std::size_t b = 0; b < AdapterState::kNumBlocks; ++b) {
    out.push_back({std::string(AdapterState::kBlockNames[b]), blocks[b]->rows(), blocks[b]->cols(),
                   offset});
    offset += blocks[b]->size();
  }
  return out;
}

std::size_t catalog_size(const std::vector<ParamBlock>& catalog) {
  return catalog.empty() ? 0 : catalog.back().offset + catalog.back().size();
}

const ParamBlock& block_of(const std::vector<ParamBlock>& catalog, std::size_t index) {
  for (const auto& b : catalog)
    if (index >= b.offset && index < b.offset + b.size()) return b;
  throw std::out_of_range("parameter index " + std::to_string(index) + " outside catalog");
}

std::vector<double> flatten(const AdapterState& state) {
  std::vector<double> flat;
  flat.reserve(state.parameter_count());
  for (const Matrix* b : state.blocks()) flat.insert(flat.end(), b->data(), b->data() + b->size());
  return flat;
}

void unflatten(std::span<const double> flat, AdapterState& state) {
  if (flat.size() != state.parameter_count())
    throw std::invalid_argument("unflatten: size mismatch");
  std::size_t offset = 0;
  for (Matrix* b : state.blocks()) {
    std::copy_n(flat.data() + offset, b->size(), b->data());
    offset += b->size();
  }
}

void require_finite(const GradSpec& g) {
  for (const auto& b : g.catalog) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!std::isfinite(g.grad[b.offset + i])) {
        throw NonFiniteGradientError("non-finite gradient in parameter " + b.name + "[" +
                                     std::to_string(i / b.cols) + "," +
                                     std::to_string(i % b.cols) + "]");
      }
    }
  }
}

double central_difference(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> x, std::size_t index, double h) {
  const double x0 = x[index];
  x[index] = x0 + h;
  const double plus = f(x);
  x[index] = x0 - h;
  const double minus = f(x);
  return (plus - minus) / (2.0 * h);
}

TuneContext TuneContext::make(const HetGraph& graph, const FrozenReps& reps) {
  TuneContext ctx;
  ctx.graph = &graph;
  ctx.reps = &reps;
  ctx.x_bar = normalize_feature_rows(graph.target_features());
  const std::size_t n = graph.num_targets();
  ctx.known.assign(n, kUnlabeled);
  ctx.labeled.assign(n, 0);
  for (std::size_t i : graph.split.train) {
    ctx.known[i] = graph.labels[i];
    ctx.labeled[i] = 1;
  }
  return ctx;
}

StepStructure prepare_step(const TuneContext& ctx, const AdapterState& state,
                           const TuneConfig& cfg, std::size_t epoch, const KnnSelection* reuse) {
  StepStructure out;
  const Matrix projected = structure_projection(ctx.reps->htil, state);
  out.selection = reuse ? *reuse : select_neighbors(projected, cfg.adapter.k);
  const HomStructure hs = hom_structure_from_selection(projected, out.selection);
  out.hard = propagate_labels(hs.a, ctx.known, ctx.num_classes()).hard;

  Rng pair_rng(derive_seed(cfg.train.seed, "margin-pairs", epoch));
  out.pairs = sample_margin_pairs(out.hard, ctx.num_classes(), pair_rng);

  const std::size_t n = ctx.reps->num_nodes();
  out.rec_sample.resize(n);
  std::iota(out.rec_sample.begin(), out.rec_sample.end(), std::size_t{0});
  const std::size_t m = cfg.train.rec_sample;
  if (m > 0 && m < n) {
    Rng rng(derive_seed(cfg.train.seed, "rec-sample", epoch));
    for (std::size_t i = 0; i < m; ++i) std::swap(out.rec_sample[i], out.rec_sample[i + rng.index(n - i)]);
    out.rec_sample.resize(m);
    std::sort(out.rec_sample.begin(), out.rec_sample.end());
  }
  return out;
}

namespace {

Matrix scaled(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.values()) v *= s;
  return out;
}

void add_into(Matrix& dst, const Matrix& src) { axpy(1.0, src, dst); }

}  // namespace

ObjectiveEval evaluate_objective(const TuneContext& ctx, const AdapterState& state,
                                 const StepStructure& st, const LossWeights& w, bool with_grad) {
  ObjectiveEval ev;
  ev.fp = forward(*ctx.reps, state, st.selection);
  const ForwardPass& fp = ev.fp;
  const std::size_t c = ctx.num_classes();
  const Matrix& p = fp.pred.p;

  ev.protos_pred = class_prototypes_pred(p, ctx.known, c);
  const LossGrad con = contrastive_loss(p, ev.protos_pred, st.hard, ctx.labeled, w);
  const ReconstructionLoss rec = reconstruction_loss(fp.hom_structure.a, ctx.x_bar, st.rec_sample);
  const Matrix protos_rep = class_prototypes_rep(fp.het.m_hat, ctx.known, c);
  LossGrad mar;
  if (w.margin_variant == MarginVariant::kHinge) {
    mar = margin_loss(protos_rep, fp.het.m_hat, st.hard, st.pairs, w.gamma, &ev.margin_degenerate);
  } else {
    mar = infonce_alignment_loss(protos_rep, fp.het.m_hat, st.hard, w.tau);
  }
  ev.parts = {con.value, rec.value, mar.value};
  ev.j = total_objective(ev.parts, w);
  if (!with_grad) return ev;

  const FrozenReps& reps = *ctx.reps;
  const std::size_t n = reps.num_nodes();
  const std::size_t dp = state.out_dim();

  // Prediction head.
  Matrix d_p(n, c);
  if (w.use_contrastive) {
    d_p = con.grad_rows;
    backprop_prototypes(con.grad_protos, ctx.known, d_p);
  }
  const Matrix g_rho = kernels::matmul_tn(fp.pred.z, d_p);
  const Matrix d_z = kernels::matmul_nt(d_p, state.w_rho);
  Matrix d_ztil(n, dp), d_zhat(n, dp);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dp; ++k) {
      d_ztil(i, k) = d_z(i, k);
      d_zhat(i, k) = d_z(i, dp + k);
    }
  }

  // Homogeneous branch: Ztil = proj(Etil) + alpha A F.
  const CsrMatrix& a = fp.hom_structure.a;
  std::vector<double> g_a(a.nnz(), 0.0);
  for (std::size_t e = 0; e < a.nnz(); ++e) g_a[e] = w.eta * rec.grad_a[e];
  const Matrix& f = fp.hom.f;
  Matrix d_f = scaled(kernels::spmm(a, d_ztil), state.alpha);  // A is symmetric
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      g_a[e] += state.alpha * dot(d_ztil.row(i), f.row(a.col_idx[e]));
    }
  }
  for (std::size_t i = 0; i < d_f.size(); ++i)
    if (fp.f_pre.data()[i] < 0.0) d_f.data()[i] = 0.0;
  const Matrix g_up = kernels::matmul_tn(fp.f_mid, d_f);
  const Matrix g_down = kernels::matmul_tn(reps.htil, kernels::matmul_nt(d_f, state.w_up));

  // Structure: A = (ReLU(At) + ReLU(At)^T) / 2 with At the cosine in the
  // projected space over the fixed selection.
  const KnnSelection& sel = fp.hom_structure.selection;
  Matrix d_q(n, dp);
  for (std::size_t i = 0; i < sel.n; ++i) {
    for (std::size_t s = 0; s < sel.k; ++s) {
      if (!(fp.hom_structure.similarity[i * sel.k + s] > 0.0)) continue;
      const std::size_t j = sel.index[i * sel.k + s];
      const double g = 0.5 * (g_a[a.find(i, j)] + g_a[a.find(j, i)]);
      if (g == 0.0) continue;
      add_cosine_grad(fp.projected.row(i), fp.projected.row(j), g, d_q.row(i));
      add_cosine_grad(fp.projected.row(j), fp.projected.row(i), g, d_q.row(j));
    }
  }
  const Matrix g_theta_up = kernels::matmul_tn(fp.theta_mid, d_q);
  const Matrix g_theta_down =
      kernels::matmul_tn(reps.htil, kernels::matmul_nt(d_q, state.w_theta_up));

  // Heterogeneous branch: Zhat = proj(Ehat) + beta sum_r s_r M_r.
  Matrix d_mhat = scaled(d_zhat, state.beta);
  if (w.mu != 0.0) {
    add_into(d_mhat, scaled(mar.grad_rows, w.mu));
    backprop_prototypes(scaled(mar.grad_protos, w.mu), ctx.known, d_mhat);
  }
  const HetScores& sc = fp.het.scores;
  const std::size_t types = reps.num_edge_types();
  Matrix d_s(n, types);
  Matrix g_het_up(state.theta_up.rows(), dp), g_het_down(state.theta_down.rows(),
                                                         state.theta_down.cols());
  for (std::size_t r = 0; r < types; ++r) {
    const Matrix& m = fp.het.m_typed[r];
    const Matrix& pre = fp.m_pre[r];
    Matrix d_pre(n, dp);
    for (std::size_t i = 0; i < n; ++i) {
      if (!reps.neighbor_mask[r][i]) continue;
      d_s(i, r) = dot(d_mhat.row(i), m.row(i));
      const double s = sc.s(i, r);
      for (std::size_t k = 0; k < dp; ++k)
        if (pre(i, k) >= 0.0) d_pre(i, k) = s * d_mhat(i, k);
    }
    add_into(g_het_up, kernels::matmul_tn(fp.m_mid[r], d_pre));
    add_into(g_het_down,
             kernels::matmul_tn(reps.hhat_typed[r], kernels::matmul_nt(d_pre, state.theta_up)));
  }
  Matrix g_eps(state.w_eps.rows(), 1);
  {
    Matrix d_u(n, types);
    for (std::size_t i = 0; i < n; ++i) {
      if (sc.isolated[i]) continue;
      double mean = 0.0;
      for (std::size_t r = 0; r < types; ++r) mean += sc.s(i, r) * d_s(i, r);
      for (std::size_t r = 0; r < types; ++r) {
        if (!reps.neighbor_mask[r][i]) continue;
        const double t = sc.logits(i, r);
        d_u(i, r) = sc.s(i, r) * (d_s(i, r) - mean) * (1.0 - t * t);
      }
    }
    for (std::size_t r = 0; r < types; ++r) {
      Matrix col(n, 1);
      for (std::size_t i = 0; i < n; ++i) col(i, 0) = d_u(i, r);
      add_into(g_eps, kernels::matmul_tn(reps.hhat_typed[r], col));
    }
  }

  ev.grad.catalog = param_catalog(state);
  ev.grad.grad.reserve(state.parameter_count());
  const std::array<const Matrix*, AdapterState::kNumBlocks> grads = {
      &g_down, &g_up, &g_theta_down, &g_theta_up, &g_het_down, &g_het_up, &g_eps, &g_rho};
  for (const Matrix* g : grads) {
    ev.grad.grad.insert(ev.grad.grad.end(), g->data(), g->data() + g->size());
  }
  return ev;
}

namespace {

double safe_homophily(const CsrMatrix& a, const std::vector<int>& labels) {
  try {
    return homophily_ratio(a, labels);
  } catch (const std::invalid_argument&) {
    return 0.0;
  }
}

}  // namespace

TuneResult tune_from(const TuneContext& ctx, AdapterState state, const TuneConfig& cfg,
                     const EpochObserver& observer, bool record_timing) {
  cfg.train.validate();
  cfg.loss.validate();
  TuneResult res;
  std::vector<double> flat = flatten(state);
  AdamState opt(flat.size());
  const AdamConfig adam{.lr = cfg.train.lr};
  const HetGraph& graph = *ctx.graph;
  KnnSelection selection;

  for (std::size_t epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool refresh = (epoch - 1) % cfg.train.structure_refresh == 0;
    const StepStructure st = prepare_step(ctx, state, cfg, epoch, refresh ? nullptr : &selection);
    selection = st.selection;
    const ObjectiveEval ev = evaluate_objective(ctx, state, st, cfg.loss, true);
    if (!std::isfinite(ev.j)) {
      res.diverged = true;
      res.message = "objective not finite at epoch " + std::to_string(epoch);
      break;
    }
    try {
      require_finite(ev.grad);
    } catch (const NonFiniteGradientError& e) {
      res.diverged = true;
      res.message = std::string(e.what()) + " at epoch " + std::to_string(epoch);
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_con = ev.parts.con;
    rec.l_rec = ev.parts.rec;
    rec.l_mar = ev.parts.mar;
    rec.j = ev.j;
    const Classification cls = classify(ev.fp.pred.p, ev.protos_pred, cfg.loss.tau);
    rec.train_err = error_rate(cls.labels, graph.labels, graph.split.train);
    rec.test_err = error_rate(cls.labels, graph.labels, graph.split.test);
    rec.homophily = safe_homophily(ev.fp.hom_structure.a, graph.labels);

    adam_step(flat, ev.grad.grad, opt, adam);
    unflatten(flat, state);

    if (record_timing) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
    }
    res.history.push_back(rec);
    if (observer) observer(rec, ev, st);
  }
  res.state = std::move(state);
  return res;
}

TuneResult tune(const HetGraph& graph, const FrozenReps& reps, const TuneConfig& cfg,
                const EpochObserver& observer, bool record_timing) {
  const TuneContext ctx = TuneContext::make(graph, reps);
  AdapterState init = init_adapters(reps.dim(), ctx.num_classes(), cfg.adapter, cfg.train.seed);
  return tune_from(ctx, std::move(init), cfg, observer, record_timing);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "epoch,l_con,l_rec,l_mar,j,train_err,test_err,homophily,wall_ms\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << fmt(r.l_con) << ',' << fmt(r.l_rec) << ',' << fmt(r.l_mar) << ','
        << fmt(r.j) << ',' << fmt(r.train_err) << ',' << fmt(r.test_err) << ','
        << fmt(r.homophily) << ',' << fmt(r.wall_ms) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

GradCheckReport grad_check(const HetGraph& graph, const FrozenReps& reps, const TuneConfig& cfg,
                           const GradCheckOptions& opts) {
  if (opts.n_probes == 0) throw std::invalid_argument("grad_check: n_probes must be >= 1");
  const TuneContext ctx = TuneContext::make(graph, reps);
  AdapterState state = init_adapters(reps.dim(), ctx.num_classes(), cfg.adapter, cfg.train.seed);
  Rng point_rng(derive_seed(opts.seed, "gradcheck-point"));
  for (Matrix* m : {&state.w_up, &state.theta_up}) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(m->rows()));
    for (double& v : m->values()) v = point_rng.normal(0.0, sd);
  }

  const StepStructure st = prepare_step(ctx, state, cfg, 1);
  const ObjectiveEval base = evaluate_objective(ctx, state, st, cfg.loss, true);
  const auto& catalog = base.grad.catalog;

  std::vector<std::size_t> candidates;
  if (opts.blocks.empty()) {
    candidates.resize(catalog_size(catalog));
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  } else {
    for (const auto& name : opts.blocks) {
      const auto it = std::find_if(catalog.begin(), catalog.end(),
                                   [&](const ParamBlock& b) { return b.name == name; });
      if (it == catalog.end())
        throw std::invalid_argument("parameter '" + name + "' not in catalog");
      for (std::size_t i = 0; i < it->size(); ++i) candidates.push_back(it->offset + i);
    }
  }

  GradCheckReport report;
  std::size_t probes = opts.n_probes;
  if (probes > candidates.size()) {
    report.warnings.push_back("n_probes " + std::to_string(probes) + " exceeds catalog size " +
                              std::to_string(candidates.size()) + "; clamped");
    probes = candidates.size();
  }
  Rng probe_rng(derive_seed(opts.seed, "gradcheck-probes"));
  for (std::size_t i = 0; i < probes; ++i)
    std::swap(candidates[i], candidates[i + probe_rng.index(candidates.size() - i)]);
  candidates.resize(probes);

  const std::vector<double> flat = flatten(state);
  const auto objective = [&](std::span<const double> x) {
    AdapterState s = state;
    unflatten(x, s);
    return evaluate_objective(ctx, s, st, cfg.loss, false).j;
  };
  for (std::size_t idx : candidates) {
    const double fd = central_difference(objective, flat, idx, opts.step);
    const double ga = base.grad.grad[idx] * opts.corrupt_scale;
    const double rel =
        std::abs(ga - fd) / std::max({std::abs(ga), std::abs(fd), 1e-8});
    if (rel > report.max_rel_error || report.worst_param.empty()) {
      report.max_rel_error = std::max(report.max_rel_error, rel);
      const ParamBlock& b = block_of(catalog, idx);
      const std::size_t local = idx - b.offset;
      report.worst_param = b.name + "[" + std::to_string(local / b.cols) + "," +
                           std::to_string(local % b.cols) + "]";
    }
  }
  report.probes = probes;
  return report;
}

}  // namespace hga
