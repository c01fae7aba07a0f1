// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "hga/adapters.hpp"
#include "hga/encoder.hpp"

using namespace hga;

namespace {

AdapterState tiny_state(std::size_t d, std::size_t dp, std::size_t c, std::uint64_t seed) {
  AdapterConfig cfg;
  cfg.out_dim = dp;
  cfg.rank_hom = 1;
  cfg.rank_het = 1;
  cfg.k = 2;
  AdapterState s = init_adapters(d, c, cfg, seed);
  s.w_up = test::random_matrix(1, dp, seed + 1);
  s.theta_up = test::random_matrix(1, dp, seed + 2);
  return s;
}

FrozenReps tiny_reps() {
  const HetGraph g = generate_synthetic(test::tiny_spec());
  return encode(g, pretrain(g, init_encoder(g, 8, 1), 0, 1));
}

}  // namespace

TEST_CASE("parameter count matches the closed form") {
  AdapterConfig cfg;
  cfg.out_dim = 64;
  const AdapterState s = init_adapters(64, 3, cfg, 0);
  CHECK(s.parameter_count() == analytic_parameter_count(64, 64, 4, 4, 3));
  // 2 (64*4 + 4*64) + 64*4 + 4*64 + 64 + 128*3
  CHECK(s.parameter_count() == 1024 + 512 + 64 + 384);
}

TEST_CASE("up factors start at zero, so the adapted outputs equal the frozen ones") {
  AdapterConfig cfg;
  cfg.out_dim = 8;
  cfg.rank_hom = 2;
  cfg.rank_het = 2;
  const AdapterState s = init_adapters(8, 2, cfg, 5);
  CHECK(s == init_adapters(8, 2, cfg, 5));
  for (double v : s.w_up.values()) CHECK(v == 0.0);
  for (double v : s.theta_up.values()) CHECK(v == 0.0);
  const FrozenReps r = tiny_reps();
  const ForwardPass fp = forward(r, s, select_neighbors(structure_projection(r.htil, s), 3));
  CHECK(fp.hom.z == r.etil);
  CHECK(fp.het.z == r.ehat);
}

TEST_CASE("rank and shape validation") {
  AdapterConfig cfg;
  cfg.out_dim = 8;
  cfg.rank_hom = 3;
  CHECK_THROWS_WITH_AS(cfg.validate(8), doctest::Contains("rank_hom"), std::invalid_argument);
  cfg.rank_hom = 2;
  cfg.rank_het = 2;
  CHECK_NOTHROW(cfg.validate(8));
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(8), std::invalid_argument);
  cfg.k = 1;
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(8), std::invalid_argument);
}

TEST_CASE("map_hom scalar and zero cases") {
  AdapterState s;
  s.w_down = Matrix(1, 1, 3.0);
  s.w_up = Matrix(1, 1, -1.0);
  CHECK(map_hom(Matrix(1, 1, 2.0), s)(0, 0) == 0.0);
  s.w_up = Matrix(1, 1, 1.0);
  CHECK(map_hom(Matrix(1, 1, 2.0), s)(0, 0) == 6.0);
  CHECK(map_hom(Matrix(1, 1, 0.0), s)(0, 0) == 0.0);
  s.w_down = Matrix(1, 1, 0.0);
  CHECK(map_hom(Matrix(1, 1, 2.0), s)(0, 0) == 0.0);
}

TEST_CASE("rectified symmetrization on the two-node example") {
  const KnnSelection sel{2, 1, {1, 0}};
  const CsrMatrix a = symmetrize_rectified(sel, {0.5, -0.3});
  CHECK(a.to_dense() == Matrix(2, 2, std::vector<double>{0, 0.25, 0.25, 0}));
}

TEST_CASE("identical projected rows give a unit edge") {
  const Matrix projected(2, 3, std::vector<double>{1, 2, 3, 1, 2, 3});
  const HomStructure h = hom_structure_from_selection(projected, select_neighbors(projected, 1));
  CHECK(h.similarity[0] == doctest::Approx(1.0));
  const Matrix a = h.a.to_dense();
  CHECK(a(0, 0) == 0.0);
  CHECK(a(0, 1) == doctest::Approx(1.0));
  CHECK(a(1, 0) == a(0, 1));
}

TEST_CASE("learned structure is scale invariant, symmetric, non-negative and sparse") {
  const FrozenReps r = tiny_reps();
  const AdapterState s = tiny_state(8, 8, 2, 3);
  for (std::size_t k : {1u, 3u, 5u}) {
    const HomStructure h = learn_hom_structure(r.htil, s, k);
    Matrix scaled = r.htil;
    for (double& v : scaled.values()) v *= 5.0;
    CHECK(learn_hom_structure(scaled, s, k).selection.index == h.selection.index);
    const Matrix a = h.a.to_dense();
    const std::size_t n = a.rows();
    CHECK(h.a.nnz() <= 2 * k * n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(a(i, i) == 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(a(i, j) == a(j, i));
        CHECK(a(i, j) >= 0.0);
      }
    }
  }
}

TEST_CASE("hom_forward adds alpha times the aggregated mapping") {
  AdapterState s;
  s.w_down = Matrix(2, 1, std::vector<double>{1, 0});
  s.w_up = Matrix(1, 2, std::vector<double>{1, 2});
  s.alpha = 0.5;
  const Matrix htil(2, 2, std::vector<double>{1, 0, 3, 0});
  const Matrix etil(2, 2, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  const CsrMatrix a = csr_from_triplets(2, 2, {{0, 1, 0.8}, {1, 0, 0.8}});
  const HomOutput out = hom_forward(htil, etil, s, a);
  // F_1 = (3, 6); Ztil_0 = Etil_0 + 0.5 * 0.8 * F_1.
  CHECK(out.z(0, 0) == doctest::Approx(0.1 + 0.4 * 3));
  CHECK(out.z(0, 1) == doctest::Approx(0.2 + 0.4 * 6));
  s.alpha = 0.0;
  CHECK(hom_forward(htil, etil, s, a).z == etil);
  s.alpha = 0.5;
  CHECK(hom_forward(htil, etil, s, CsrMatrix{2, 2, {0, 0, 0}, {}, {}}).z == etil);
}

TEST_CASE("edge-type scores are a masked softmax of tanh logits") {
  AdapterState s;
  s.w_eps = Matrix(1, 1, 1.0);
  SUBCASE("two types") {
    const std::vector<Matrix> hhat{Matrix(1, 1, std::atanh(0.5)), Matrix(1, 1, std::atanh(-0.5))};
    const HetScores sc = learn_het_structure(hhat, {{1}, {1}}, s);
    CHECK(sc.s(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(sc.s(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));
  }
  SUBCASE("equal logits") {
    const std::vector<Matrix> hhat(3, Matrix(1, 1, 0.7));
    const HetScores sc = learn_het_structure(hhat, {{1}, {1}, {1}}, s);
    for (std::size_t r = 0; r < 3; ++r) CHECK(sc.s(0, r) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("masking") {
    const std::vector<Matrix> hhat{Matrix(3, 1, 0.2), Matrix(3, 1, -0.9)};
    const HetScores sc = learn_het_structure(hhat, {{1, 0, 0}, {0, 1, 0}}, s);
    CHECK(sc.s(0, 0) == 1.0);
    CHECK(sc.s(0, 1) == 0.0);
    CHECK(sc.s(1, 1) == 1.0);
    CHECK(sc.s(2, 0) == 0.0);
    CHECK(sc.s(2, 1) == 0.0);
    CHECK(sc.isolated == std::vector<char>{0, 0, 1});
  }
}

TEST_CASE("score rows sum to one over present types") {
  const FrozenReps r = tiny_reps();
  const AdapterState s = tiny_state(8, 8, 2, 4);
  const HetScores sc = learn_het_structure(r.hhat_typed, r.neighbor_mask, s);
  for (std::size_t i = 0; i < r.num_nodes(); ++i) {
    double sum = 0.0;
    for (std::size_t t = 0; t < r.num_edge_types(); ++t) sum += sc.s(i, t);
    CHECK(std::abs(sum - (sc.isolated[i] ? 0.0 : 1.0)) <= 1e-12);
  }
}

TEST_CASE("het_forward mixes the typed mappings by score") {
  AdapterState s;
  s.w_eps = Matrix(2, 1, 0.0);
  s.w_up = Matrix(1, 2);
  s.theta_down = Matrix(2, 2, std::vector<double>{1, 0, 0, 1});
  s.theta_up = Matrix(2, 2, std::vector<double>{1, 0, 0, 1});
  s.beta = 1.0;
  const std::vector<Matrix> hhat{Matrix(1, 2, std::vector<double>{1, 0}),
                                 Matrix(1, 2, std::vector<double>{0, 1})};
  const Matrix ehat(1, 2, 0.0);
  const HetOutput out = het_forward(hhat, ehat, {{1}, {1}}, s);
  CHECK(out.m_hat == Matrix(1, 2, std::vector<double>{0.5, 0.5}));
  CHECK(out.z == out.m_hat);
  s.beta = 0.0;
  CHECK(het_forward(hhat, ehat, {{1}, {1}}, s).z == ehat);
  s.beta = 1.0;
  const HetOutput single = het_forward(hhat, ehat, {{1}, {0}}, s);
  CHECK(single.m_hat == hhat[0]);
}

TEST_CASE("fusion concatenates and projects") {
  AdapterState s;
  const Matrix zt(2, 1, std::vector<double>{1, 2});
  const Matrix zh(2, 1, std::vector<double>{3, 4});
  s.w_rho = Matrix(2, 2, std::vector<double>{1, 0, 0, 1});
  Prediction p = fuse_and_predict(zt, zh, s);
  CHECK(p.z == Matrix(2, 2, std::vector<double>{1, 3, 2, 4}));
  CHECK(p.p == p.z);
  s.w_rho = Matrix(2, 1, 0.0);
  p = fuse_and_predict(zt, zh, s);
  CHECK(p.p == Matrix(2, 1, 0.0));
}

TEST_CASE("proj_frozen truncates or pads") {
  const Matrix m(1, 3, std::vector<double>{1, 2, 3});
  CHECK(proj_frozen(m, 3) == m);
  CHECK(proj_frozen(m, 2) == Matrix(1, 2, std::vector<double>{1, 2}));
  CHECK(proj_frozen(m, 4) == Matrix(1, 4, std::vector<double>{1, 2, 3, 0}));
}

TEST_CASE("adapter checkpoints round-trip") {
  const AdapterState s = tiny_state(8, 8, 2, 6);
  const auto path = test::scratch_dir("adapters") / "adapter.bin";
  save_adapters(s, path, {{"note", "x"}});
  CHECK(load_adapters(path) == s);
}
