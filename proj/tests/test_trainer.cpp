// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "hga/adam.hpp"
#include "hga/encoder.hpp"
#include "hga/trainer.hpp"

using namespace hga;

namespace {

struct Tiny {
  HetGraph graph = generate_synthetic(test::tiny_spec());
  EncoderParams encoder = pretrain(graph, init_encoder(graph, 8, 1), 0, 1);
  FrozenReps reps = encode(graph, encoder);
  TuneConfig cfg = [] {
    TuneConfig c;
    c.adapter.out_dim = 8;
    c.adapter.rank_hom = 2;
    c.adapter.rank_het = 2;
    c.adapter.k = 3;
    c.train.epochs = 5;
    c.train.seed = 1;
    return c;
  }();
};

GradCheckOptions probes(std::size_t n) {
  GradCheckOptions o;
  o.n_probes = n;
  return o;
}

}  // namespace

TEST_CASE("adam first step moves by lr against the gradient sign") {
  std::vector<double> p{0.0};
  AdamState st(1);
  adam_step(p, std::vector<double>{1.0}, st, {.lr = 0.1});
  CHECK(p[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  std::vector<double> q{0.5, -2.0};
  AdamState st2(2);
  adam_step(q, std::vector<double>{0.0, 0.0}, st2, {.lr = 0.1});
  CHECK(q == std::vector<double>{0.5, -2.0});
}

TEST_CASE("adam matches a hand-unrolled two-step oracle") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double g1 = 0.3, g2 = -1.2;
  double m = (1 - b1) * g1, v = (1 - b2) * g1 * g1;
  double x = 1.0 - lr * (m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + eps);
  m = b1 * m + (1 - b1) * g2;
  v = b2 * v + (1 - b2) * g2 * g2;
  x -= lr * (m / (1 - b1 * b1)) / (std::sqrt(v / (1 - b2 * b2)) + eps);
  std::vector<double> p{1.0};
  AdamState st(1);
  adam_step(p, std::vector<double>{g1}, st, {.lr = lr});
  adam_step(p, std::vector<double>{g2}, st, {.lr = lr});
  CHECK(p[0] == doctest::Approx(x).epsilon(1e-14));
}

TEST_CASE("central difference on a quadratic probe") {
  auto sq = [](std::span<const double> x) { return x[0] * x[0]; };
  CHECK(central_difference(sq, {3.0}, 0) == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("flat parameter vector round-trips through the catalog") {
  Tiny t;
  AdapterState s = init_adapters(8, 2, t.cfg.adapter, 3);
  const auto catalog = param_catalog(s);
  REQUIRE(catalog.size() == AdapterState::kNumBlocks);
  CHECK(catalog_size(catalog) == s.parameter_count());
  CHECK(block_of(catalog, 0).name == "w_down");
  CHECK(block_of(catalog, catalog_size(catalog) - 1).name == "w_rho");
  std::vector<double> flat = flatten(s);
  for (double& v : flat) v += 1.0;
  AdapterState u = s;
  unflatten(flat, u);
  CHECK(flatten(u) == flat);
}

TEST_CASE("require_finite names the offending parameter") {
  Tiny t;
  const AdapterState s = init_adapters(8, 2, t.cfg.adapter, 3);
  GradSpec g{param_catalog(s), std::vector<double>(s.parameter_count(), 0.0)};
  CHECK_NOTHROW(require_finite(g));
  const ParamBlock& eps = g.catalog[6];
  g.grad[eps.offset + 5] = NAN;
  CHECK_THROWS_WITH_AS(require_finite(g), doctest::Contains("w_eps[5,0]"), NonFiniteGradientError);
}

TEST_CASE("analytic gradient agrees with finite differences on the tiny instance") {
  Tiny t;
  const GradCheckReport r = grad_check(t.graph, t.reps, t.cfg, probes(1000));
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.probes == init_adapters(8, 2, t.cfg.adapter, 1).parameter_count());
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("clamped") != std::string::npos);
}

TEST_CASE("gradient check also holds for the ablation variants") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.loss.margin_variant = MarginVariant::kInfoNce;
  CHECK(grad_check(t.graph, t.reps, cfg, probes(200)).max_rel_error < 1e-4);
  cfg = t.cfg;
  cfg.loss.use_contrastive = false;
  cfg.train.rec_sample = 5;
  CHECK(grad_check(t.graph, t.reps, cfg, probes(200)).max_rel_error < 1e-4);
}

TEST_CASE("gradient check rejects names outside the catalog and flags corruption") {
  Tiny t;
  CHECK_THROWS_WITH_AS(grad_check(t.graph, t.reps, t.cfg, {.blocks = {"hom_mlp"}}),
                       doctest::Contains("not in catalog"), std::invalid_argument);
  const GradCheckReport r =
      grad_check(t.graph, t.reps, t.cfg, {.n_probes = 32, .blocks = {"w_rho"}, .corrupt_scale = 1.01});
  CHECK(r.max_rel_error > 1e-4);
  CHECK(r.worst_param.rfind("w_rho[", 0) == 0);
}

TEST_CASE("edge-type weights get no gradient when nothing downstream reads them") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.adapter.beta = 0.0;
  cfg.loss.mu = 0.0;
  const TuneContext ctx = TuneContext::make(t.graph, t.reps);
  const AdapterState s = init_adapters(8, 2, cfg.adapter, 1);
  const StepStructure st = prepare_step(ctx, s, cfg, 1);
  const ObjectiveEval ev = evaluate_objective(ctx, s, st, cfg.loss, true);
  const ParamBlock& eps = ev.grad.catalog[6];
  REQUIRE(eps.name == "w_eps");
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(ev.grad.grad[eps.offset + i] == 0.0);
}

TEST_CASE("with lambda = eta = mu = 0 the objective is the labeled contrastive term") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.loss.lambda = cfg.loss.eta = cfg.loss.mu = 0.0;
  const TuneContext ctx = TuneContext::make(t.graph, t.reps);
  AdapterState s = init_adapters(8, 2, cfg.adapter, 1);
  s.w_up = test::random_matrix(2, 8, 4);
  const StepStructure st = prepare_step(ctx, s, cfg, 1);
  const ObjectiveEval ev = evaluate_objective(ctx, s, st, cfg.loss, false);

  // Reference path from the public pieces.
  const ForwardPass fp = forward(t.reps, s, st.selection);
  const Matrix protos = class_prototypes(fp.pred.p, ctx.known, 2);
  std::vector<int> hard(ctx.known);
  const LossGrad con = contrastive_loss(fp.pred.p, protos, hard, ctx.labeled, cfg.loss);
  CHECK(std::abs(ev.j - con.value) < 1e-12);
  CHECK(ev.parts.con == ev.j);
}

TEST_CASE("zero epochs returns the initial state and an empty history") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.train.epochs = 0;
  const TuneResult r = tune(t.graph, t.reps, cfg);
  CHECK(r.history.empty());
  CHECK(r.state == init_adapters(8, 2, cfg.adapter, cfg.train.seed));
}

TEST_CASE("zero learning rate leaves the parameters untouched") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.train.lr = 0.0;
  const TuneResult r = tune(t.graph, t.reps, cfg);
  CHECK(r.history.size() == cfg.train.epochs);
  CHECK(r.state == init_adapters(8, 2, cfg.adapter, cfg.train.seed));
}

TEST_CASE("tuning is deterministic and never touches the encoder") {
  Tiny t;
  const std::string before = t.encoder.bytes();
  const TuneResult a = tune(t.graph, t.reps, t.cfg);
  const TuneResult b = tune(t.graph, t.reps, t.cfg);
  CHECK(t.encoder.bytes() == before);
  CHECK(a.state == b.state);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].j == b.history[e].j);
    CHECK(a.history[e].wall_ms == 0.0);
  }
  CHECK_FALSE(a.diverged);
}

TEST_CASE("history records epochs in order and the objective falls") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.train.epochs = 40;
  std::size_t calls = 0;
  const TuneResult r = tune(t.graph, t.reps, cfg, [&](const EpochRecord& rec, const ObjectiveEval&,
                                                      const StepStructure&) {
    CHECK(rec.epoch == ++calls);
  });
  CHECK(calls == 40);
  CHECK(r.history.back().j < r.history.front().j);
  const auto path = test::scratch_dir("history") / "history.csv";
  write_history_csv(r.history, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,l_con,l_rec,l_mar,j,train_err,test_err,homophily,wall_ms");
}

TEST_CASE("structure refresh reuses the selection between refreshes") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.train.structure_refresh = 3;
  cfg.train.epochs = 6;
  std::vector<std::vector<std::size_t>> selections;
  tune(t.graph, t.reps, cfg, [&](const EpochRecord&, const ObjectiveEval&, const StepStructure& st) {
    selections.push_back(st.selection.index);
  });
  REQUIRE(selections.size() == 6);
  CHECK(selections[1] == selections[0]);
  CHECK(selections[2] == selections[0]);
  CHECK(selections[4] == selections[3]);
  CHECK(selections[5] == selections[3]);
}

TEST_CASE("divergence stops the run and is reported") {
  Tiny t;
  TuneConfig cfg = t.cfg;
  cfg.train.lr = 1e300;
  cfg.train.epochs = 50;
  const TuneResult r = tune(t.graph, t.reps, cfg);
  CHECK(r.diverged);
  CHECK_FALSE(r.message.empty());
  CHECK(r.history.size() < 50);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.structure_refresh = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.lr = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
