// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/encoder.hpp"

#include <cmath>

#include "hga/adam.hpp"
#include "hga/checkpoint.hpp"
#include "hga/kernels.hpp"
#include "hga/rng.hpp"

namespace hga {

using json = nlohmann::json;

Matrix& EncoderParams::mutable_hom_mlp() {
  if (frozen_) throw FrozenParameterError("encoder parameters are frozen");
  return hom_mlp_;
}

Matrix& EncoderParams::mutable_het_mlp(const std::string& type) {
  if (frozen_) throw FrozenParameterError("encoder parameters are frozen");
  return het_mlp_.at(type);
}

namespace {

Checkpoint to_checkpoint(const EncoderParams& p) {
  Checkpoint ckpt;
  ckpt.header = {{"format", "hga-encoder"},
                 {"version", 1},
                 {"hidden_dim", p.hidden_dim()},
                 {"seed", p.seed()},
                 {"frozen", p.frozen()}};
  ckpt.tensors.emplace_back("hom_mlp", p.hom_mlp());
  for (const auto& [type, w] : p.het_mlps()) ckpt.tensors.emplace_back("het_mlp/" + type, w);
  return ckpt;
}

Matrix uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

// Mean-squared reconstruction of x through relu(x w) d; returns the loss and
// accumulates gradients for w and d.
double reconstruction_step(const Matrix& x, const Matrix& w, const Matrix& d, Matrix& grad_w,
                           Matrix& grad_d) {
  const Matrix pre = kernels::matmul(x, w);
  const Matrix h = relu(pre);
  Matrix diff = kernels::matmul(h, d);
  const double scale = 1.0 / static_cast<double>(x.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff.data()[i] -= x.data()[i];
    loss += diff.data()[i] * diff.data()[i];
    diff.data()[i] *= 2.0 * scale;
  }
  grad_d = kernels::matmul_tn(h, diff);
  Matrix dh = kernels::matmul_nt(diff, d);
  for (std::size_t i = 0; i < dh.size(); ++i)
    if (pre.data()[i] <= 0.0) dh.data()[i] = 0.0;
  grad_w = kernels::matmul_tn(x, dh);
  return loss * scale;
}

}  // namespace

std::string EncoderParams::bytes() const { return encode_checkpoint(to_checkpoint(*this)); }

EncoderParams init_encoder(const HetGraph& graph, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw std::invalid_argument("encoder: hidden dim must be >= 1");
  EncoderParams p;
  p.hidden_dim_ = d;
  p.seed_ = seed;
  Rng rng(derive_seed(seed, "encoder-init"));
  p.hom_mlp_ = uniform_init(graph.target_features().cols(), d, rng);
  for (const auto& type : graph.node_types) {
    p.het_mlp_.emplace(type, uniform_init(graph.features.at(type).cols(), d, rng));
  }
  return p;
}

EncoderParams pretrain(const HetGraph& graph, EncoderParams params, std::size_t epochs,
                       std::uint64_t seed, std::vector<double>* trace) {
  if (params.frozen()) throw FrozenParameterError("pretrain: encoder already frozen");

  // Branches: the homogeneous MLP on target features, then one per node type.
  struct Branch {
    const Matrix* x;
    Matrix* w;
    Matrix decoder;
  };
  std::vector<Branch> branches;
  Rng rng(derive_seed(seed, "encoder-pretrain"));
  const std::size_t d = params.hidden_dim();
  branches.push_back({&graph.target_features(), &params.mutable_hom_mlp(), {}});
  for (const auto& type : graph.node_types) {
    branches.push_back({&graph.features.at(type), &params.mutable_het_mlp(type), {}});
  }
  std::vector<AdamState> opt_w, opt_d;
  for (auto& b : branches) {
    b.decoder = uniform_init(d, b.x->cols(), rng);
    opt_w.emplace_back(b.w->size());
    opt_d.emplace_back(b.decoder.size());
  }

  const AdamConfig adam{.lr = 0.01};
  Matrix gw, gd;
  for (std::size_t epoch = 0; epoch <= epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t k = 0; k < branches.size(); ++k) {
      Branch& b = branches[k];
      total += reconstruction_step(*b.x, *b.w, b.decoder, gw, gd);
      if (epoch == epochs) continue;
      adam_step(b.w->values(), gw.values(), opt_w[k], adam);
      adam_step(b.decoder.values(), gd.values(), opt_d[k], adam);
    }
    if (trace) trace->push_back(total);
  }
  params.freeze();
  return params;
}

FrozenReps encode(const HetGraph& graph, const EncoderParams& params) {
  if (!params.frozen()) throw std::logic_error("encode: encoder must be frozen first");
  FrozenReps reps;
  const std::size_t n = graph.num_targets();
  const std::size_t d = params.hidden_dim();

  reps.htil = relu(kernels::matmul(graph.target_features(), params.hom_mlp()));

  // Mean aggregation over the closed homogeneous neighbourhood.
  {
    std::vector<Triplet> trip;
    const CsrMatrix& a = graph.hom_adjacency;
    for (std::size_t i = 0; i < n; ++i) {
      const double deg = 1.0 + static_cast<double>(a.row_ptr[i + 1] - a.row_ptr[i]);
      trip.push_back({i, i, 1.0 / deg});
      for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
        trip.push_back({i, a.col_idx[e], a.values[e] / deg});
      }
    }
    reps.etil = kernels::spmm(csr_from_triplets(n, n, std::move(trip)), reps.htil);
  }

  std::map<std::string, Matrix> mapped;
  for (const auto& type : graph.node_types) {
    mapped.emplace(type, relu(kernels::matmul(graph.features.at(type), params.het_mlp(type))));
  }

  for (const auto& et : graph.edge_types) {
    const bool from_src = et.src == graph.target_type;
    const bool from_dst = et.dst == graph.target_type;
    if (!from_src && !from_dst) continue;
    std::vector<Triplet> trip;
    for (const auto& [s, t] : et.edges) {
      if (from_src) trip.push_back({s, t, 1.0});
      if (from_dst && !(from_src && s == t)) trip.push_back({t, s, 1.0});
    }
    const std::size_t other = graph.num_nodes(from_src ? et.dst : et.src);
    CsrMatrix adj = csr_from_triplets(n, other, std::move(trip));
    std::vector<char> mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double deg = 0.0;
      for (std::size_t e = adj.row_ptr[i]; e < adj.row_ptr[i + 1]; ++e) deg += adj.values[e];
      mask[i] = deg > 0.0 ? 1 : 0;
      for (std::size_t e = adj.row_ptr[i]; e < adj.row_ptr[i + 1]; ++e) adj.values[e] /= deg;
    }
    reps.hhat_typed.push_back(kernels::spmm(adj, mapped.at(from_src ? et.dst : et.src)));
    reps.neighbor_mask.push_back(std::move(mask));
    reps.edge_type_names.push_back(et.name);
  }

  reps.ehat = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t present = 0;
    for (std::size_t r = 0; r < reps.num_edge_types(); ++r) {
      if (!reps.neighbor_mask[r][i]) continue;
      ++present;
      const auto src = reps.hhat_typed[r].row(i);
      auto dst = reps.ehat.row(i);
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
    if (present > 0)
      for (double& v : reps.ehat.row(i)) v /= static_cast<double>(present);
  }
  return reps;
}

void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
  write_checkpoint(path, to_checkpoint(params));
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.header.value("format", "") != "hga-encoder") {
    throw std::runtime_error(path.string() + ": not an encoder checkpoint");
  }
  EncoderParams p;
  p.hidden_dim_ = ckpt.header.at("hidden_dim").get<std::size_t>();
  p.seed_ = ckpt.header.at("seed").get<std::uint64_t>();
  for (const auto& [name, m] : ckpt.tensors) {
    if (name == "hom_mlp") {
      p.hom_mlp_ = m;
    } else if (name.starts_with("het_mlp/")) {
      p.het_mlp_.emplace(name.substr(8), m);
    }
  }
  p.frozen_ = ckpt.header.at("frozen").get<bool>();
  return p;
}

}  // namespace hga
