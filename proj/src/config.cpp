// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#include "hga/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hga {

using json = nlohmann::json;

namespace {

// Reads the known fields of one JSON object section, rejecting the rest.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(name_ + ": unknown key '" + key + "'");
    }
  }

 private:
  json j_;
  std::string name_;
  std::set<std::string> seen_;
};

json sub(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? json::object() : *it;
}

}  // namespace

json to_json(const SyntheticSpec& s) {
  return {{"n_target", s.n_target},
          {"num_classes", s.num_classes},
          {"feature_dim", s.feature_dim},
          {"feature_separation", s.feature_separation},
          {"aux_types", s.aux_types},
          {"aux_nodes", s.aux_nodes},
          {"aux_feature_dim", s.aux_feature_dim},
          {"aux_degree", s.aux_degree},
          {"aux_class_affinity", s.aux_class_affinity},
          {"p_in", s.p_in},
          {"p_out", s.p_out},
          {"hom_noise", s.hom_noise},
          {"labeled_per_class", s.labeled_per_class},
          {"seed", s.seed}};
}

SyntheticSpec synthetic_from_json(const json& j, SyntheticSpec s) {
  Section sec(j, "synthetic");
  sec.get("n_target", s.n_target);
  sec.get("num_classes", s.num_classes);
  sec.get("feature_dim", s.feature_dim);
  sec.get("feature_separation", s.feature_separation);
  sec.get("aux_types", s.aux_types);
  sec.get("aux_nodes", s.aux_nodes);
  sec.get("aux_feature_dim", s.aux_feature_dim);
  sec.get("aux_degree", s.aux_degree);
  sec.get("aux_class_affinity", s.aux_class_affinity);
  sec.get("p_in", s.p_in);
  sec.get("p_out", s.p_out);
  sec.get("hom_noise", s.hom_noise);
  sec.get("labeled_per_class", s.labeled_per_class);
  sec.get("seed", s.seed);
  sec.finish();
  return s;
}

json to_json(const TuneConfig& c) {
  return {{"adapter",
           {{"out_dim", c.adapter.out_dim},
            {"rank_hom", c.adapter.rank_hom},
            {"rank_het", c.adapter.rank_het},
            {"k", c.adapter.k},
            {"alpha", c.adapter.alpha},
            {"beta", c.adapter.beta}}},
          {"objective",
           {{"lambda", c.loss.lambda},
            {"tau", c.loss.tau},
            {"gamma", c.loss.gamma},
            {"eta", c.loss.eta},
            {"mu", c.loss.mu},
            {"use_contrastive", c.loss.use_contrastive},
            {"margin_variant",
             c.loss.margin_variant == MarginVariant::kHinge ? "hinge" : "infonce"},
            {"rec_sample", c.train.rec_sample}}},
          {"trainer",
           {{"lr", c.train.lr},
            {"epochs", c.train.epochs},
            {"seed", c.train.seed},
            {"structure_refresh", c.train.structure_refresh}}}};
}

json to_json(const RunConfig& c) {
  json j = to_json(c.tune);
  if (c.dataset) j["dataset"] = c.dataset->string();
  j["synthetic"] = to_json(c.synthetic);
  j["encoder"] = {{"dim", c.encoder.dim}, {"pretrain_epochs", c.encoder.pretrain_epochs}};
  j["output_dir"] = c.output_dir.string();
  return j;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  Section top(j, "config");
  std::string dataset, output_dir = c.output_dir.string();
  json ignored;
  top.get("dataset", dataset);
  top.get("output_dir", output_dir);
  for (const char* key : {"synthetic", "encoder", "adapter", "objective", "trainer"})
    top.get(key, ignored);
  top.finish();
  if (!dataset.empty()) {
    std::filesystem::path p(dataset);
    c.dataset = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  c.output_dir = output_dir;
  c.synthetic = synthetic_from_json(sub(j, "synthetic"));

  Section enc(sub(j, "encoder"), "encoder");
  enc.get("dim", c.encoder.dim);
  enc.get("pretrain_epochs", c.encoder.pretrain_epochs);
  enc.finish();

  AdapterConfig& a = c.tune.adapter;
  Section ad(sub(j, "adapter"), "adapter");
  ad.get("out_dim", a.out_dim);
  ad.get("rank_hom", a.rank_hom);
  ad.get("rank_het", a.rank_het);
  ad.get("k", a.k);
  ad.get("alpha", a.alpha);
  ad.get("beta", a.beta);
  ad.finish();

  LossWeights& w = c.tune.loss;
  std::string variant = "hinge";
  Section ob(sub(j, "objective"), "objective");
  ob.get("lambda", w.lambda);
  ob.get("tau", w.tau);
  ob.get("gamma", w.gamma);
  ob.get("eta", w.eta);
  ob.get("mu", w.mu);
  ob.get("use_contrastive", w.use_contrastive);
  ob.get("margin_variant", variant);
  ob.get("rec_sample", c.tune.train.rec_sample);
  ob.finish();
  if (variant == "hinge") {
    w.margin_variant = MarginVariant::kHinge;
  } else if (variant == "infonce") {
    w.margin_variant = MarginVariant::kInfoNce;
  } else {
    throw ConfigError("objective.margin_variant: expected \"hinge\" or \"infonce\"");
  }

  TrainConfig& t = c.tune.train;
  Section tr(sub(j, "trainer"), "trainer");
  tr.get("lr", t.lr);
  tr.get("epochs", t.epochs);
  tr.get("seed", t.seed);
  tr.get("structure_refresh", t.structure_refresh);
  tr.finish();

  c.validate();
  return c;
}

void RunConfig::validate() const {
  try {
    if (!dataset) synthetic.validate();
    if (encoder.dim == 0) throw std::invalid_argument("encoder.dim must be >= 1");
    tune.adapter.validate(encoder.dim);
    tune.loss.validate();
    tune.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (dataset && !std::filesystem::is_directory(*dataset)) {
    throw ConfigError("dataset: missing directory " + dataset->string());
  }
}

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " +
                      e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(parse_json_file(path), path.parent_path());
}

std::string fingerprint(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hga
