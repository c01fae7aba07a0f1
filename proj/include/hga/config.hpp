// Copyright 2026 The hga Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "hga/hetgraph.hpp"
#include "hga/trainer.hpp"
#include "json.hpp"

namespace hga {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EncoderConfig {
  std::size_t dim = 64;
  std::size_t pretrain_epochs = 0;
};

/// Everything one run needs. Serialized into every artifact it produces.
struct RunConfig {
  /// Dataset directory; the synthetic spec is used when absent.
  std::optional<std::filesystem::path> dataset;
  SyntheticSpec synthetic;
  EncoderConfig encoder;
  TuneConfig tune;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_from_json(const nlohmann::json& j, SyntheticSpec base = {});

nlohmann::json to_json(const TuneConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);
/// Fields missing from `j` keep their defaults; unknown keys and wrong types
/// raise ConfigError. Relative dataset paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Reads and parses a config file; parse errors carry the byte offset.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json parse_json_file(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the compact dump of `j`.
std::string fingerprint(const nlohmann::json& j);
inline std::string config_fingerprint(const TuneConfig& cfg) { return fingerprint(to_json(cfg)); }

}  // namespace hga
