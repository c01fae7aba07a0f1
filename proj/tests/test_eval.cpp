// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "hga/encoder.hpp"
#include "hga/eval.hpp"

using namespace hga;

namespace {

std::vector<int> random_labels(std::size_t n, int c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> out(n);
  for (int& v : out) v = static_cast<int>(rng.index(static_cast<std::uint64_t>(c)));
  return out;
}

// Per-class precision/recall from explicit membership tests.
F1Scores f1_oracle(const std::vector<int>& pred, const std::vector<int>& truth, int c) {
  double macro = 0.0;
  std::size_t correct = 0;
  for (int k = 0; k < c; ++k) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == k && truth[i] == k) ++tp;
      if (pred[i] == k && truth[i] != k) ++fp;
      if (pred[i] != k && truth[i] == k) ++fn;
    }
    if (tp > 0) macro += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  return {macro / c, static_cast<double>(correct) / static_cast<double>(pred.size())};
}

// ARI from the four pair-agreement counts, enumerating all pairs.
double ari_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  double ss = 0, sd = 0, ds = 0, dd = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++ss;
      else if (sa) ++sd;
      else if (sb) ++ds;
      else ++dd;
    }
  }
  const double den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
  return den == 0.0 ? 1.0 : 2.0 * (ss * dd - sd * ds) / den;
}

double nmi_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1 / n;
    pb[b[i]] += 1 / n;
    pab[{a[i], b[i]}] += 1 / n;
  }
  double ha = 0, hb = 0, mi = 0;
  for (auto [k, p] : pa) ha -= p * std::log(p);
  for (auto [k, p] : pb) hb -= p * std::log(p);
  for (auto [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
  const double den = 0.5 * (ha + hb);
  return den == 0.0 ? 0.0 : mi / den;
}

}  // namespace

TEST_CASE("classification probabilities") {
  // Cosines 0.9 and 0.1 against two unit prototypes.
  const Matrix p(1, 2, std::vector<double>{0.9, std::sqrt(1 - 0.81)});
  const Matrix protos(2, 2, std::vector<double>{1, 0, 0.1, std::sqrt(0.99)});
  const Classification c = classify(p, protos, 1.0);
  const double cos1 = 0.9 * 0.1 + std::sqrt(0.19) * std::sqrt(0.99);
  const double e0 = std::exp(0.9), e1 = std::exp(cos1);
  CHECK(c.probs(0, 0) == doctest::Approx(e0 / (e0 + e1)));
  CHECK(c.labels[0] == 0);

  const Matrix q(1, 2, std::vector<double>{1, 0});
  const Matrix ab(2, 2, std::vector<double>{0.9, std::sqrt(0.19), 0.1, std::sqrt(0.99)});
  const Classification d = classify(q, ab, 1.0);
  CHECK(d.probs(0, 0) == doctest::Approx(0.6900).epsilon(1e-4));
  CHECK(d.probs(0, 1) == doctest::Approx(0.3100).epsilon(1e-4));
}

TEST_CASE("classification ties, limits and scale invariance") {
  const Matrix protos(3, 2, std::vector<double>{1, 0, 0, 1, -1, 0});
  const Classification tie = classify(Matrix(1, 2, std::vector<double>{0, 0}), protos, 0.5);
  CHECK(tie.labels[0] == 0);
  for (std::size_t k = 0; k < 3; ++k) CHECK(tie.probs(0, k) == doctest::Approx(1.0 / 3.0));
  const Classification sharp = classify(Matrix(1, 2, std::vector<double>{0, 1}), protos, 1e-3);
  CHECK(sharp.labels[0] == 1);
  CHECK(sharp.probs(0, 1) == doctest::Approx(1.0));
  const Matrix p = test::random_matrix(5, 2, 3);
  Matrix p5 = p;
  for (double& v : p5.values()) v *= 5.0;
  CHECK(classify(p, protos, 0.5).labels == classify(p5, protos, 0.5).labels);
}

TEST_CASE("F1 hand cases") {
  const F1Scores same = f1_scores({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
  CHECK(same.macro_f1 == 1.0);
  CHECK(same.micro_f1 == 1.0);
  const F1Scores half = f1_scores({0, 0, 0, 0}, {0, 0, 1, 1}, 2);
  CHECK(half.micro_f1 == doctest::Approx(0.5));
  CHECK(half.macro_f1 == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(f1_scores({0}, {0, 1}, 2), std::invalid_argument);
}

TEST_CASE("F1 matches a brute-force oracle on 20-point instances") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto truth = random_labels(20, 3, seed);
    const auto pred = random_labels(20, 3, seed + 1000);
    const F1Scores got = f1_scores(pred, truth, 3);
    const F1Scores want = f1_oracle(pred, truth, 3);
    CHECK(got.macro_f1 == want.macro_f1);
    CHECK(got.micro_f1 == want.micro_f1);
  }
}

TEST_CASE("NMI and ARI match pair-counting oracles") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto a = random_labels(20, 3, seed);
    const auto b = random_labels(20, 4, seed + 77);
    CHECK(std::abs(normalized_mutual_info(a, b) - nmi_oracle(a, b)) < 1e-9);
    CHECK(std::abs(adjusted_rand_index(a, b) - ari_oracle(a, b)) < 1e-9);
  }
  const std::vector<int> t{0, 0, 1, 1, 2, 2};
  const std::vector<int> perm{2, 2, 0, 0, 1, 1};
  CHECK(normalized_mutual_info(t, perm) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index(t, perm) == doctest::Approx(1.0));
  CHECK(normalized_mutual_info({0, 0, 0}, {0, 0, 0}) == 0.0);
}

TEST_CASE("ARI of independent random labelings is near zero") {
  const auto a = random_labels(4000, 4, 1);
  const auto b = random_labels(4000, 4, 2);
  CHECK(std::abs(adjusted_rand_index(a, b)) < 0.01);
}

TEST_CASE("k-means finds the exhaustive best 2-partition on separated clouds") {
  Matrix x = test::random_matrix(20, 2, 9, -0.5, 0.5);
  std::vector<int> truth(20);
  for (std::size_t i = 10; i < 20; ++i) {
    x(i, 0) += 6.0;
    truth[i] = 1;
  }
  // Exhaustive search over all 2-partitions (point 0 fixed in block 0).
  double best = INFINITY;
  std::vector<int> best_assign;
  for (std::uint32_t mask = 0; mask < (1u << 19); ++mask) {
    std::vector<int> asg(20, 0);
    for (std::size_t i = 1; i < 20; ++i) asg[i] = (mask >> (i - 1)) & 1u;
    double sum[2][2] = {{0, 0}, {0, 0}}, cnt[2] = {0, 0};
    for (std::size_t i = 0; i < 20; ++i) {
      cnt[asg[i]] += 1;
      sum[asg[i]][0] += x(i, 0);
      sum[asg[i]][1] += x(i, 1);
    }
    if (cnt[1] == 0) continue;
    double inertia = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      const int k = asg[i];
      const double dx = x(i, 0) - sum[k][0] / cnt[k], dy = x(i, 1) - sum[k][1] / cnt[k];
      inertia += dx * dx + dy * dy;
    }
    if (inertia < best) {
      best = inertia;
      best_assign = asg;
    }
  }
  const KMeansResult km = kmeans(x, 2, 4);
  CHECK(std::abs(km.inertia - best) < 1e-9);
  CHECK(normalized_mutual_info(km.assignment, best_assign) == doctest::Approx(1.0));
  CHECK(normalized_mutual_info(km.assignment, truth) == doctest::Approx(1.0));
  CHECK(kmeans(x, 2, 4).assignment == km.assignment);
}

TEST_CASE("cluster metrics on perfect and degenerate inputs") {
  Matrix probs(6, 2);
  const std::vector<int> truth{0, 1, 0, 1, 0, 1};
  for (std::size_t i = 0; i < 6; ++i) probs(i, static_cast<std::size_t>(truth[i])) = 1.0;
  const ClusterScores s = cluster_metrics(probs, truth, 2, 0);
  CHECK(s.nmi == doctest::Approx(1.0));
  CHECK(s.ari == doctest::Approx(1.0));
  const ClusterScores flat = cluster_metrics(Matrix(6, 2, 0.5), truth, 2, 0);
  CHECK(flat.nmi == 0.0);
}

TEST_CASE("error rates and the generalization gap") {
  std::vector<int> truth(150, 0), pred(150, 0);
  Split split;
  for (std::size_t i = 0; i < 50; ++i) split.train.push_back(i);
  for (std::size_t i = 50; i < 150; ++i) split.test.push_back(i);
  pred[0] = 1;                                     // 1/50 = 0.02
  for (std::size_t i = 50; i < 61; ++i) pred[i] = 1;  // 11/100 = 0.11
  const ErrorRates e = error_rates(pred, truth, split);
  CHECK(e.train_error == doctest::Approx(0.02));
  CHECK(e.test_error == doctest::Approx(0.11));
  CHECK(e.gap == doctest::Approx(0.09));
  CHECK_THROWS_AS(error_rate(pred, truth, {}), std::invalid_argument);
}

TEST_CASE("grid expansion") {
  const TuneConfig base;
  const auto table2 = expand_grid("table2", base);
  REQUIRE(table2.size() == 7);
  CHECK(std::count_if(table2.begin(), table2.end(),
                      [](const AblationCell& c) { return c.variant == "full"; }) == 1);
  const auto& first = table2[0];
  CHECK_FALSE(first.cfg.loss.use_contrastive);
  CHECK(first.cfg.loss.eta == 0.0);

  const auto cells = expand_grid(nlohmann::json::parse(R"([
      "full", "drop_hom_adapter+drop_Lmar",
      {"name": "small_k", "set": {"k": 2, "alpha": 0.5}, "toggles": ["infonce_margin_variant"]}])"),
                                 base);
  REQUIRE(cells.size() == 3);
  CHECK(cells[1].cfg.adapter.alpha == 0.0);
  CHECK(cells[1].cfg.loss.mu == 0.0);
  CHECK(cells[2].variant == "small_k");
  CHECK(cells[2].cfg.adapter.k == 2);
  CHECK(cells[2].cfg.loss.margin_variant == MarginVariant::kInfoNce);

  TuneConfig ext = base;
  apply_toggle("drop_label_extension", ext);
  CHECK(ext.loss.lambda == 0.0);
  CHECK(ext.loss.eta == 0.0);
  CHECK(ext.loss.mu == 0.0);
  CHECK_THROWS_WITH_AS(apply_toggle("drop_everything", ext), doctest::Contains("unknown ablation toggle"),
                       std::invalid_argument);
  CHECK_THROWS_AS(expand_grid(nlohmann::json::parse(R"(["full+nope"])"), base),
                  std::invalid_argument);
  CHECK_THROWS_AS(expand_grid("no_such_grid", base), std::invalid_argument);
}

TEST_CASE("a one-cell ablation equals a plain tune and evaluate") {
  const HetGraph g = generate_synthetic(test::tiny_spec());
  const FrozenReps reps = encode(g, pretrain(g, init_encoder(g, 8, 1), 0, 1));
  TuneConfig cfg;
  cfg.adapter.out_dim = 8;
  cfg.adapter.rank_hom = 2;
  cfg.adapter.rank_het = 2;
  cfg.adapter.k = 3;
  cfg.train.epochs = 10;
  const TuneResult r = tune(g, reps, cfg);
  MetricsReport plain = evaluate_model(TuneContext::make(g, reps), r.state, cfg);
  plain.epochs_run = r.history.size();
  const auto rows = ablate(g, reps, expand_grid(nlohmann::json::array({"full"}), cfg), 2);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].to_json() == plain.to_json());
  const auto path = test::scratch_dir("ablate") / "ablation.csv";
  write_ablation_csv(rows, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("variant,", 0) == 0);
}
