// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "fixtures.hpp"
#include "hga/encoder.hpp"
#include "hga/kernels.hpp"

using namespace hga;

namespace {

// Three papers, two authors. Paper 0 has author 1 only, paper 1 both, paper 2 none.
HetGraph toy_graph(bool with_hom_edges) {
  HetGraph g;
  g.node_types = {"paper", "author"};
  g.target_type = "paper";
  g.features["paper"] = test::random_matrix(3, 4, 11);
  g.features["author"] = test::random_matrix(2, 5, 12);
  g.edge_types.push_back({"paper-author", "paper", "author", {{0, 1}, {1, 0}, {1, 1}}});
  std::vector<Triplet> t;
  if (with_hom_edges) t = {{0, 1, 1.0}, {1, 0, 1.0}};
  g.hom_adjacency = csr_from_triplets(3, 3, t);
  g.labels = {0, 1, kUnlabeled};
  g.num_classes = 2;
  g.split = {{0, 1}, {2}};
  return g;
}

EncoderParams frozen_encoder(const HetGraph& g, std::size_t d, std::uint64_t seed) {
  return pretrain(g, init_encoder(g, d, seed), 0, seed);
}

}  // namespace

TEST_CASE("encoder initialization is seeded") {
  const HetGraph g = generate_synthetic(test::tiny_spec());
  CHECK(init_encoder(g, 8, 3).bytes() == init_encoder(g, 8, 3).bytes());
  CHECK(init_encoder(g, 8, 3).bytes() != init_encoder(g, 8, 4).bytes());
  CHECK_THROWS_AS(init_encoder(g, 0, 3), std::invalid_argument);
  const EncoderParams p = init_encoder(g, 8, 3);
  CHECK(p.hom_mlp().rows() == 8);
  CHECK(p.hom_mlp().cols() == 8);
  CHECK(p.het_mlps().size() == g.node_types.size());
  const double bound = 1.0 / std::sqrt(8.0);
  for (double v : p.hom_mlp().values()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("pretrain freezes, and a frozen encoder refuses writes") {
  const HetGraph g = generate_synthetic(test::tiny_spec());
  EncoderParams init = init_encoder(g, 8, 3);
  CHECK_FALSE(init.frozen());
  CHECK_NOTHROW(init.mutable_hom_mlp());
  const EncoderParams p = pretrain(g, init, 0, 3);
  CHECK(p.frozen());
  CHECK(p.hom_mlp() == init.hom_mlp());
  CHECK_THROWS_WITH_AS(pretrain(g, p, 1, 3), doctest::Contains("already frozen"),
                       FrozenParameterError);
  EncoderParams copy = p;
  CHECK_THROWS_AS(copy.mutable_hom_mlp(), FrozenParameterError);
  CHECK_THROWS_AS(copy.mutable_het_mlp("paper"), FrozenParameterError);
}

TEST_CASE("pretraining lowers its reconstruction objective") {
  const HetGraph g = generate_synthetic(test::tiny_spec());
  std::vector<double> trace;
  const EncoderParams p = pretrain(g, init_encoder(g, 8, 5), 30, 5, &trace);
  REQUIRE(trace.size() == 31);
  CHECK(trace.back() < trace.front());
  CHECK(p.frozen());
}

TEST_CASE("encode refuses an unfrozen encoder") {
  const HetGraph g = toy_graph(true);
  CHECK_THROWS_AS(encode(g, init_encoder(g, 3, 1)), std::logic_error);
}

TEST_CASE("without homogeneous edges Etil equals Htil") {
  const HetGraph g = toy_graph(false);
  const FrozenReps r = encode(g, frozen_encoder(g, 3, 1));
  CHECK(r.etil == r.htil);
}

TEST_CASE("homogeneous aggregation averages the closed neighbourhood") {
  HetGraph g = toy_graph(true);
  g.features["paper"] = Matrix(3, 4, std::vector<double>{1, 2, 3, 4, 1, 2, 3, 4, 0, 1, 0, 1});
  const FrozenReps r = encode(g, frozen_encoder(g, 3, 1));
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(r.etil(0, c) == doctest::Approx(r.etil(1, c)));
    CHECK(r.etil(2, c) == r.htil(2, c));
  }
}

TEST_CASE("typed neighbour means follow the mask") {
  const HetGraph g = toy_graph(true);
  const EncoderParams p = frozen_encoder(g, 3, 2);
  const FrozenReps r = encode(g, p);
  REQUIRE(r.num_edge_types() == 1);
  CHECK(r.edge_type_names[0] == "paper-author");
  const Matrix mapped = relu(kernels::matmul(g.features.at("author"), p.het_mlp("author")));
  CHECK(r.neighbor_mask[0] == std::vector<char>{1, 1, 0});
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(r.hhat_typed[0](0, c) == doctest::Approx(mapped(1, c)));
    CHECK(r.hhat_typed[0](1, c) == doctest::Approx(0.5 * (mapped(0, c) + mapped(1, c))));
    CHECK(r.hhat_typed[0](2, c) == 0.0);
    CHECK(r.ehat(0, c) == doctest::Approx(mapped(1, c)));
    CHECK(r.ehat(2, c) == 0.0);
  }
}

TEST_CASE("encoder checkpoints round-trip byte for byte") {
  const HetGraph g = generate_synthetic(test::tiny_spec());
  const EncoderParams p = frozen_encoder(g, 8, 9);
  const auto path = test::scratch_dir("encoder") / "encoder.bin";
  save_encoder(p, path);
  const EncoderParams q = load_encoder(path);
  CHECK(q.bytes() == p.bytes());
  CHECK(q.frozen());
  CHECK(q.seed() == 9);
}
