// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/adapters.hpp"

#include <cmath>
#include <fstream>

#include "hga/rng.hpp"

namespace hga {

using json = nlohmann::json;

void AdapterConfig::validate(std::size_t in_dim) const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("adapter config: " + msg); };
  if (out_dim == 0) fail("out_dim must be >= 1");
  if (rank_hom == 0 || rank_het == 0) fail("ranks must be >= 1");
  const std::size_t limit = std::min(in_dim, out_dim) / 4;
  if (rank_hom > limit) fail("rank_hom must be <= min(d, d')/4 = " + std::to_string(limit));
  if (rank_het > limit) fail("rank_het must be <= min(d, d')/4 = " + std::to_string(limit));
  if (k == 0) fail("k must be >= 1");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) fail("alpha and beta must be non-negative");
}

std::array<Matrix*, AdapterState::kNumBlocks> AdapterState::blocks() {
  return {&w_down, &w_up, &w_theta_down, &w_theta_up, &theta_down, &theta_up, &w_eps, &w_rho};
}

std::array<const Matrix*, AdapterState::kNumBlocks> AdapterState::blocks() const {
  return {&w_down, &w_up, &w_theta_down, &w_theta_up, &theta_down, &theta_up, &w_eps, &w_rho};
}

std::size_t AdapterState::parameter_count() const {
  std::size_t total = 0;
  for (const Matrix* b : blocks()) total += b->size();
  return total;
}

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.values()) v = rng.normal(0.0, stddev);
  return m;
}

}  // namespace

AdapterState init_adapters(std::size_t d, std::size_t c, const AdapterConfig& cfg,
                           std::uint64_t seed) {
  cfg.validate(d);
  Rng rng(derive_seed(seed, "adapter-init"));
  AdapterState s;
  s.w_down = gaussian(d, cfg.rank_hom, rng);
  s.w_up = Matrix(cfg.rank_hom, cfg.out_dim);
  s.w_theta_down = gaussian(d, cfg.rank_hom, rng);
  s.w_theta_up = gaussian(cfg.rank_hom, cfg.out_dim, rng);
  s.theta_down = gaussian(d, cfg.rank_het, rng);
  s.theta_up = Matrix(cfg.rank_het, cfg.out_dim);
  s.w_eps = gaussian(d, 1, rng);
  s.w_rho = gaussian(2 * cfg.out_dim, c, rng);
  s.alpha = cfg.alpha;
  s.beta = cfg.beta;
  return s;
}

Matrix proj_frozen(const Matrix& frozen, std::size_t out_dim) {
  if (frozen.cols() == out_dim) return frozen;
  Matrix out(frozen.rows(), out_dim);
  const std::size_t keep = std::min(out_dim, frozen.cols());
  for (std::size_t i = 0; i < frozen.rows(); ++i)
    for (std::size_t c = 0; c < keep; ++c) out(i, c) = frozen(i, c);
  return out;
}

Matrix map_hom(const Matrix& htil, const AdapterState& state) {
  return relu(kernels::matmul(kernels::matmul(htil, state.w_down), state.w_up));
}

Matrix structure_projection(const Matrix& htil, const AdapterState& state) {
  return kernels::matmul(kernels::matmul(htil, state.w_theta_down), state.w_theta_up);
}

KnnSelection select_neighbors(const Matrix& projected, std::size_t k) {
  kernels::KnnResult knn = kernels::cosine_knn(projected, k);
  return {knn.n, knn.k, std::move(knn.index)};
}

CsrMatrix symmetrize_rectified(const KnnSelection& sel, const std::vector<double>& values) {
  std::vector<Triplet> trip;
  trip.reserve(2 * sel.index.size());
  for (std::size_t i = 0; i < sel.n; ++i) {
    for (std::size_t s = 0; s < sel.k; ++s) {
      const double v = values[i * sel.k + s];
      if (!(v > 0.0)) continue;
      const std::size_t j = sel.index[i * sel.k + s];
      trip.push_back({i, j, 0.5 * v});
      trip.push_back({j, i, 0.5 * v});
    }
  }
  return csr_from_triplets(sel.n, sel.n, std::move(trip));
}

HomStructure hom_structure_from_selection(const Matrix& projected, const KnnSelection& sel) {
  HomStructure out;
  out.selection = sel;
  out.similarity.resize(sel.index.size());
  for (std::size_t i = 0; i < sel.n; ++i) {
    for (std::size_t s = 0; s < sel.k; ++s) {
      out.similarity[i * sel.k + s] =
          kernels::cosine(projected.row(i), projected.row(sel.index[i * sel.k + s]));
    }
  }
  out.a = symmetrize_rectified(sel, out.similarity);
  return out;
}

HomStructure learn_hom_structure(const Matrix& htil, const AdapterState& state, std::size_t k) {
  const Matrix projected = structure_projection(htil, state);
  return hom_structure_from_selection(projected, select_neighbors(projected, k));
}

HomOutput hom_forward(const Matrix& htil, const Matrix& etil, const AdapterState& state,
                      const CsrMatrix& a) {
  HomOutput out;
  out.f = map_hom(htil, state);
  out.f_adapt = kernels::spmm(a, out.f);
  out.z = proj_frozen(etil, state.out_dim());
  axpy(state.alpha, out.f_adapt, out.z);
  return out;
}

HetScores learn_het_structure(const std::vector<Matrix>& hhat_typed,
                              const std::vector<std::vector<char>>& mask, const AdapterState& state) {
  const std::size_t types = hhat_typed.size();
  const std::size_t n = types ? hhat_typed[0].rows() : 0;
  HetScores out{Matrix(n, types), Matrix(n, types), std::vector<char>(n, 1)};
  for (std::size_t r = 0; r < types; ++r) {
    const Matrix u = kernels::matmul(hhat_typed[r], state.w_eps);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[r][i]) continue;
      out.logits(i, r) = std::tanh(u(i, 0));
      out.isolated[i] = 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out.isolated[i]) continue;
    double peak = -INFINITY;
    for (std::size_t r = 0; r < types; ++r)
      if (mask[r][i]) peak = std::max(peak, out.logits(i, r));
    double total = 0.0;
    for (std::size_t r = 0; r < types; ++r) {
      if (!mask[r][i]) continue;
      out.s(i, r) = std::exp(out.logits(i, r) - peak);
      total += out.s(i, r);
    }
    for (std::size_t r = 0; r < types; ++r) out.s(i, r) /= total;
  }
  return out;
}

namespace {

HetOutput het_forward_impl(const std::vector<Matrix>& hhat_typed, const Matrix& ehat,
                           const std::vector<std::vector<char>>& mask, const AdapterState& state,
                           std::vector<Matrix>* m_mid, std::vector<Matrix>* m_pre) {
  HetOutput out;
  out.scores = learn_het_structure(hhat_typed, mask, state);
  const std::size_t n = ehat.rows();
  out.m_hat = Matrix(n, state.out_dim());
  for (std::size_t r = 0; r < hhat_typed.size(); ++r) {
    Matrix mid = kernels::matmul(hhat_typed[r], state.theta_down);
    Matrix pre = kernels::matmul(mid, state.theta_up);
    Matrix m = relu(pre);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = out.scores.s(i, r);
      if (s == 0.0) continue;
      auto dst = out.m_hat.row(i);
      const auto src = m.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += s * src[c];
    }
    out.m_typed.push_back(std::move(m));
    if (m_mid) m_mid->push_back(std::move(mid));
    if (m_pre) m_pre->push_back(std::move(pre));
  }
  out.z = proj_frozen(ehat, state.out_dim());
  axpy(state.beta, out.m_hat, out.z);
  return out;
}

}  // namespace

HetOutput het_forward(const std::vector<Matrix>& hhat_typed, const Matrix& ehat,
                      const std::vector<std::vector<char>>& mask, const AdapterState& state) {
  return het_forward_impl(hhat_typed, ehat, mask, state, nullptr, nullptr);
}

Prediction fuse_and_predict(const Matrix& ztil, const Matrix& zhat, const AdapterState& state) {
  Prediction out;
  out.z = hcat(ztil, zhat);
  out.p = kernels::matmul(out.z, state.w_rho);
  return out;
}

ForwardPass forward(const FrozenReps& reps, const AdapterState& state, const KnnSelection& sel) {
  ForwardPass fp;
  fp.theta_mid = kernels::matmul(reps.htil, state.w_theta_down);
  fp.projected = kernels::matmul(fp.theta_mid, state.w_theta_up);
  fp.hom_structure = hom_structure_from_selection(fp.projected, sel);

  fp.f_mid = kernels::matmul(reps.htil, state.w_down);
  fp.f_pre = kernels::matmul(fp.f_mid, state.w_up);
  fp.hom.f = relu(fp.f_pre);
  fp.hom.f_adapt = kernels::spmm(fp.hom_structure.a, fp.hom.f);
  fp.hom.z = proj_frozen(reps.etil, state.out_dim());
  axpy(state.alpha, fp.hom.f_adapt, fp.hom.z);

  fp.het = het_forward_impl(reps.hhat_typed, reps.ehat, reps.neighbor_mask, state, &fp.m_mid,
                            &fp.m_pre);
  fp.pred = fuse_and_predict(fp.hom.z, fp.het.z, state);
  return fp;
}

Checkpoint adapter_checkpoint(const AdapterState& state) {
  Checkpoint ckpt;
  ckpt.header = {{"format", "hga-adapter"},
                 {"version", 1},
                 {"in_dim", state.in_dim()},
                 {"out_dim", state.out_dim()},
                 {"num_classes", state.num_classes()},
                 {"alpha", state.alpha},
                 {"beta", state.beta}};
  const auto blocks = state.blocks();
  for (std::size_t b = 0; b < AdapterState::kNumBlocks; ++b) {
    ckpt.tensors.emplace_back(std::string(AdapterState::kBlockNames[b]), *blocks[b]);
  }
  return ckpt;
}

void save_adapters(const AdapterState& state, const std::filesystem::path& path,
                   const json& provenance) {
  Checkpoint ckpt = adapter_checkpoint(state);
  if (!provenance.empty()) ckpt.header["provenance"] = provenance;
  write_checkpoint(path, ckpt);
}

AdapterState load_adapters(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.header.value("format", "") != "hga-adapter") {
    throw std::runtime_error(path.string() + ": not an adapter checkpoint");
  }
  AdapterState s;
  const auto blocks = s.blocks();
  for (std::size_t b = 0; b < AdapterState::kNumBlocks; ++b) {
    *blocks[b] = ckpt.tensor(std::string(AdapterState::kBlockNames[b]));
  }
  s.alpha = ckpt.header.at("alpha").get<double>();
  s.beta = ckpt.header.at("beta").get<double>();
  return s;
}

void write_triplets_csv(const CsrMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "i,j,weight\n";
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e)
      out << i << ',' << m.col_idx[e] << ',' << m.values[e] << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_triplets_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "i,j,weight\n";
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out << i << ',' << j << ',' << m(i, j) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace hga
