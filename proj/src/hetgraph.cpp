// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/hetgraph.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hga/rng.hpp"

namespace hga {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::size_t HetGraph::num_nodes(const std::string& type) const {
  const auto it = features.find(type);
  if (it == features.end()) throw DatasetError("unknown node type '" + type + "'");
  return it->second.rows();
}

void HetGraph::validate() const {
  if (node_types.size() + edge_types.size() <= 2) {
    throw DatasetError("schema: need more than two node and edge types in total");
  }
  if (std::find(node_types.begin(), node_types.end(), target_type) == node_types.end()) {
    throw DatasetError("schema: target type '" + target_type + "' is not a node type");
  }
  for (const auto& type : node_types) {
    if (!features.contains(type)) throw DatasetError("features: missing type '" + type + "'");
  }
  for (const auto& et : edge_types) {
    const std::size_t ns = num_nodes(et.src);
    const std::size_t nd = num_nodes(et.dst);
    for (std::size_t row = 0; row < et.edges.size(); ++row) {
      const auto [s, d] = et.edges[row];
      if (s >= ns || d >= nd) {
        throw DatasetError("edges_" + et.name + ".csv:" + std::to_string(row + 2) +
                           ": dangling edge (" + std::to_string(s) + "," + std::to_string(d) +
                           ")");
      }
    }
  }
  const std::size_t n = num_targets();
  if (hom_adjacency.rows != n || hom_adjacency.cols != n) {
    throw DatasetError("hom_edges: adjacency shape does not match target count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = hom_adjacency.row_ptr[i]; e < hom_adjacency.row_ptr[i + 1]; ++e) {
      const std::size_t j = hom_adjacency.col_idx[e];
      if (j == i) throw DatasetError("hom_edges: self loop on node " + std::to_string(i));
      if (hom_adjacency.at(j, i) != hom_adjacency.values[e]) {
        throw DatasetError("hom_edges: adjacency is not symmetric");
      }
    }
  }
  if (labels.size() != n) throw DatasetError("labels.csv: expected one row per target node");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < kUnlabeled || labels[i] >= static_cast<int>(num_classes)) {
      throw DatasetError("labels.csv:" + std::to_string(i + 2) + ": label out of range (" +
                         std::to_string(labels[i]) + ")");
    }
  }
  std::vector<char> in_train(n, 0);
  for (std::size_t id : split.train) {
    if (id >= n) throw DatasetError("split.json: train id out of range");
    if (labels[id] == kUnlabeled) {
      throw DatasetError("split.json: train node " + std::to_string(id) + " has no label");
    }
    in_train[id] = 1;
  }
  for (std::size_t id : split.test) {
    if (id >= n) throw DatasetError("split.json: test id out of range");
    if (in_train[id]) {
      throw DatasetError("split.json: node " + std::to_string(id) + " is in train and test");
    }
  }
}

bool HetGraph::operator==(const HetGraph& o) const {
  return node_types == o.node_types && target_type == o.target_type && features == o.features &&
         edge_types == o.edge_types && hom_adjacency.rows == o.hom_adjacency.rows &&
         hom_adjacency.row_ptr == o.hom_adjacency.row_ptr &&
         hom_adjacency.col_idx == o.hom_adjacency.col_idx &&
         hom_adjacency.values == o.hom_adjacency.values && labels == o.labels &&
         num_classes == o.num_classes && split == o.split;
}

// ---------------------------------------------------------------------------
// CSV plumbing

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, const std::string& where) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw DatasetError(where + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

struct CsvFile {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::string> lines;  // data rows, raw
};

CsvFile read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(path.filename().string() + ": missing file");
  CsvFile csv;
  csv.name = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(csv.name + ": empty file (header expected)");
  for (auto f : split_csv(line)) csv.header.emplace_back(f);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    csv.lines.push_back(std::move(line));
  }
  return csv;
}

void expect_header(const CsvFile& csv, const std::vector<std::string>& want) {
  if (csv.header != want) throw DatasetError(csv.name + ":1: unexpected header");
}

std::string where(const CsvFile& csv, std::size_t row) {
  return csv.name + ":" + std::to_string(row + 2);
}

std::vector<std::pair<std::size_t, std::size_t>> read_edge_file(const fs::path& path) {
  const CsvFile csv = read_csv(path);
  expect_header(csv, {"src", "dst"});
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(csv.lines.size());
  for (std::size_t r = 0; r < csv.lines.size(); ++r) {
    const auto fields = split_csv(csv.lines[r]);
    if (fields.size() != 2) throw DatasetError(where(csv, r) + ": expected 2 columns");
    edges.emplace_back(parse_field<std::size_t>(fields[0], where(csv, r)),
                       parse_field<std::size_t>(fields[1], where(csv, r)));
  }
  return edges;
}

void write_edge_file(const fs::path& path,
                     const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::ofstream out(path);
  out << "src,dst\n";
  for (const auto& [s, d] : edges) out << s << ',' << d << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(path.filename().string() + ": missing file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError(path.filename().string() + ": " + e.what());
  }
}

}  // namespace

HetGraph load_graph(const fs::path& dir) {
  HetGraph g;
  const json schema = read_json(dir / "schema.json");
  std::map<std::string, std::size_t> dims;
  try {
    g.node_types = schema.at("node_types").get<std::vector<std::string>>();
    g.target_type = schema.at("target_type").get<std::string>();
    g.num_classes = schema.at("num_classes").get<std::size_t>();
    dims = schema.at("feature_dims").get<std::map<std::string, std::size_t>>();
    for (const auto& et : schema.at("edge_types")) {
      g.edge_types.push_back({et.at("name").get<std::string>(), et.at("src").get<std::string>(),
                              et.at("dst").get<std::string>(), {}});
    }
  } catch (const json::exception& e) {
    throw DatasetError(std::string("schema.json: ") + e.what());
  }

  for (const auto& type : g.node_types) {
    const CsvFile csv = read_csv(dir / ("features_" + type + ".csv"));
    const auto dim_it = dims.find(type);
    if (dim_it == dims.end()) throw DatasetError("schema.json: no feature dim for '" + type + "'");
    const std::size_t f = dim_it->second;
    if (csv.header.size() != f + 1 || csv.header[0] != "id") {
      throw DatasetError(csv.name + ":1: dimension mismatch (schema says " + std::to_string(f) +
                         " features)");
    }
    Matrix m(csv.lines.size(), f);
    for (std::size_t r = 0; r < csv.lines.size(); ++r) {
      const auto fields = split_csv(csv.lines[r]);
      if (fields.size() != f + 1) throw DatasetError(where(csv, r) + ": dimension mismatch");
      if (parse_field<std::size_t>(fields[0], where(csv, r)) != r) {
        throw DatasetError(where(csv, r) + ": ids must be dense from 0");
      }
      for (std::size_t c = 0; c < f; ++c) m(r, c) = parse_field<double>(fields[c + 1], where(csv, r));
    }
    g.features.emplace(type, std::move(m));
  }

  for (auto& et : g.edge_types) et.edges = read_edge_file(dir / ("edges_" + et.name + ".csv"));

  const std::size_t n = g.features.contains(g.target_type) ? g.num_targets() : 0;
  {
    const auto hom = read_edge_file(dir / "hom_edges.csv");
    std::vector<Triplet> trip;
    for (std::size_t r = 0; r < hom.size(); ++r) {
      const auto [s, d] = hom[r];
      if (s >= n || d >= n) {
        throw DatasetError("hom_edges.csv:" + std::to_string(r + 2) + ": dangling edge");
      }
      if (s == d) throw DatasetError("hom_edges.csv:" + std::to_string(r + 2) + ": self loop");
      trip.push_back({s, d, 1.0});
      trip.push_back({d, s, 1.0});
    }
    g.hom_adjacency = csr_from_triplets(n, n, std::move(trip));
    for (double& v : g.hom_adjacency.values) v = 1.0;  // duplicate rows collapse to 0/1
  }

  {
    const CsvFile csv = read_csv(dir / "labels.csv");
    expect_header(csv, {"id", "label"});
    if (csv.lines.size() != n) {
      throw DatasetError(csv.name + ": expected " + std::to_string(n) + " rows, found " +
                         std::to_string(csv.lines.size()));
    }
    g.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto fields = split_csv(csv.lines[r]);
      if (fields.size() != 2) throw DatasetError(where(csv, r) + ": expected 2 columns");
      if (parse_field<std::size_t>(fields[0], where(csv, r)) != r) {
        throw DatasetError(where(csv, r) + ": ids must be dense from 0");
      }
      const int label = parse_field<int>(fields[1], where(csv, r));
      if (label < kUnlabeled || label >= static_cast<int>(g.num_classes)) {
        throw DatasetError(where(csv, r) + ": label out of range (" + std::to_string(label) + ")");
      }
      g.labels[r] = label;
    }
  }

  const json split = read_json(dir / "split.json");
  try {
    g.split.train = split.at("train").get<std::vector<std::size_t>>();
    g.split.test = split.at("test").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw DatasetError(std::string("split.json: ") + e.what());
  }

  g.validate();
  return g;
}

void save_graph(const HetGraph& g, const fs::path& dir) {
  fs::create_directories(dir);
  json schema;
  schema["node_types"] = g.node_types;
  schema["target_type"] = g.target_type;
  schema["num_classes"] = g.num_classes;
  json dims = json::object();
  for (const auto& type : g.node_types) dims[type] = g.features.at(type).cols();
  schema["feature_dims"] = dims;
  schema["edge_types"] = json::array();
  for (const auto& et : g.edge_types) {
    schema["edge_types"].push_back({{"name", et.name}, {"src", et.src}, {"dst", et.dst}});
  }
  {
    std::ofstream out(dir / "schema.json");
    out << schema.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write schema.json in " + dir.string());
  }

  for (const auto& type : g.node_types) {
    const Matrix& m = g.features.at(type);
    std::ofstream out(dir / ("features_" + type + ".csv"));
    out << "id";
    for (std::size_t c = 0; c < m.cols(); ++c) out << ",f" << c;
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      out << r;
      for (double v : m.row(r)) out << ',' << format_double(v);
      out << '\n';
    }
    if (!out) throw std::runtime_error("cannot write features for " + type);
  }

  for (const auto& et : g.edge_types) write_edge_file(dir / ("edges_" + et.name + ".csv"), et.edges);

  std::vector<std::pair<std::size_t, std::size_t>> hom;
  const auto& a = g.hom_adjacency;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      if (a.col_idx[e] > i) hom.emplace_back(i, a.col_idx[e]);
    }
  }
  write_edge_file(dir / "hom_edges.csv", hom);

  {
    std::ofstream out(dir / "labels.csv");
    out << "id,label\n";
    for (std::size_t i = 0; i < g.labels.size(); ++i) out << i << ',' << g.labels[i] << '\n';
    if (!out) throw std::runtime_error("cannot write labels.csv");
  }
  {
    std::ofstream out(dir / "split.json");
    out << json{{"train", g.split.train}, {"test", g.split.test}}.dump() << '\n';
    if (!out) throw std::runtime_error("cannot write split.json");
  }
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("synthetic spec: " + msg); };
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (n_target < num_classes) fail("n_target must be >= num_classes");
  if (feature_dim == 0 || aux_feature_dim == 0) fail("feature dims must be >= 1");
  if (aux_types == 0) fail("aux_types must be >= 1");
  if (aux_nodes < num_classes) fail("aux_nodes must be >= num_classes");
  if (aux_degree == 0 || aux_degree > aux_nodes / num_classes) {
    fail("aux_degree must be in [1, aux_nodes / num_classes]");
  }
  if (!(p_in >= p_out)) fail("p_in must be >= p_out");
  if (p_in > 1.0 || p_out < 0.0) fail("edge probabilities must lie in [0, 1]");
  if (hom_noise < 0.0 || hom_noise > 1.0) fail("hom_noise must lie in [0, 1]");
  if (aux_class_affinity < 0.0 || aux_class_affinity > 1.0) {
    fail("aux_class_affinity must lie in [0, 1]");
  }
  if (feature_separation < 0.0) fail("feature_separation must be >= 0");
  if (labeled_per_class == 0 || labeled_per_class * num_classes >= n_target) {
    fail("labeled_per_class must leave test nodes in every class");
  }
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

const char* const kAuxNames[] = {"author", "subject", "term", "venue"};

std::string aux_name(std::size_t t) {
  return t < std::size(kAuxNames) ? kAuxNames[t] : "aux" + std::to_string(t);
}

}  // namespace

HetGraph generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "synthetic"));
  const std::size_t n = spec.n_target;
  const std::size_t c = spec.num_classes;

  HetGraph g;
  g.target_type = "paper";
  g.node_types.push_back(g.target_type);
  g.num_classes = c;

  std::vector<int> cls(n);
  for (std::size_t i = 0; i < n; ++i) cls[i] = static_cast<int>(i % c);
  shuffle(cls, rng);
  g.labels = cls;

  // Class means at pairwise distance ~ feature_separation (random directions).
  Matrix means(c, spec.feature_dim);
  for (std::size_t k = 0; k < c; ++k) {
    auto row = means.row(k);
    for (double& v : row) v = rng.normal();
    const double scale = spec.feature_separation / std::sqrt(2.0) / (norm2(row) + 1e-300);
    for (double& v : row) v *= scale;
  }
  Matrix x(n, spec.feature_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < spec.feature_dim; ++f) {
      x(i, f) = means(static_cast<std::size_t>(cls[i]), f) + rng.normal();
    }
  }
  g.features.emplace(g.target_type, std::move(x));

  // Planted partition over target nodes.
  std::set<std::pair<std::size_t, std::size_t>> hom;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = cls[i] == cls[j] ? spec.p_in : spec.p_out;
      if (!rng.bernoulli(p)) continue;
      std::size_t a = i, b = j;
      if (spec.hom_noise > 0.0 && rng.bernoulli(spec.hom_noise)) {
        b = rng.index(n - 1);
        if (b >= a) ++b;
      }
      hom.emplace(std::min(a, b), std::max(a, b));
    }
  }
  std::vector<Triplet> trip;
  for (const auto& [a, b] : hom) {
    trip.push_back({a, b, 1.0});
    trip.push_back({b, a, 1.0});
  }
  g.hom_adjacency = csr_from_triplets(n, n, std::move(trip));

  // Auxiliary types: the first is wired by class, the rest at random.
  for (std::size_t t = 0; t < spec.aux_types; ++t) {
    const std::string name = aux_name(t);
    g.node_types.push_back(name);
    Matrix feat(spec.aux_nodes, spec.aux_feature_dim);
    for (double& v : feat.values()) v = rng.normal();
    g.features.emplace(name, std::move(feat));

    std::vector<std::vector<std::size_t>> by_class(c);
    for (std::size_t a = 0; a < spec.aux_nodes; ++a) by_class[a % c].push_back(a);

    EdgeType et{g.target_type + "-" + name, g.target_type, name, {}};
    for (std::size_t i = 0; i < n; ++i) {
      std::set<std::size_t> picked;
      while (picked.size() < spec.aux_degree) {
        std::size_t a;
        if (t == 0 && rng.bernoulli(spec.aux_class_affinity)) {
          const auto& pool = by_class[static_cast<std::size_t>(cls[i])];
          a = pool[rng.index(pool.size())];
        } else {
          a = rng.index(spec.aux_nodes);
        }
        picked.insert(a);
      }
      for (std::size_t a : picked) et.edges.emplace_back(i, a);
    }
    g.edge_types.push_back(std::move(et));
  }

  std::vector<std::vector<std::size_t>> members(c);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(cls[i])].push_back(i);
  for (auto& m : members) {
    shuffle(m, rng);
    g.split.train.insert(g.split.train.end(), m.begin(),
                         m.begin() + static_cast<std::ptrdiff_t>(spec.labeled_per_class));
    g.split.test.insert(g.split.test.end(),
                        m.begin() + static_cast<std::ptrdiff_t>(spec.labeled_per_class), m.end());
  }
  std::sort(g.split.train.begin(), g.split.train.end());
  std::sort(g.split.test.begin(), g.split.test.end());

  g.validate();
  return g;
}

double homophily_ratio(const CsrMatrix& adj, const std::vector<int>& labels) {
  if (labels.size() < adj.rows) throw std::invalid_argument("homophily_ratio: too few labels");
  double same = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < adj.rows; ++i) {
    if (labels[i] == kUnlabeled) continue;
    for (std::size_t e = adj.row_ptr[i]; e < adj.row_ptr[i + 1]; ++e) {
      const double w = adj.values[e];
      if (w < 0.0) throw std::invalid_argument("homophily_ratio: negative edge weight");
      const int lj = labels[adj.col_idx[e]];
      if (lj == kUnlabeled) continue;
      total += w;
      if (lj == labels[i]) same += w;
    }
  }
  if (total <= 0.0) throw std::invalid_argument("homophily_ratio: no edges");
  return same / total;
}

}  // namespace hga
