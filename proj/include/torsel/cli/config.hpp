#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torsel/anon/clasi.hpp"
#include "torsel/anon/metrics.hpp"
#include "torsel/learn/forest.hpp"
#include "torsel/net/network.hpp"
#include "torsel/path/select.hpp"
#include "torsel/sim/engine.hpp"

namespace torsel::cli {

/// Everything one experiment needs. Built from defaults, then a JSON config
/// file of flat dotted keys ("network.relays": 100), then TORSELLAB_*
/// environment variables, then command-line flags.
struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::string out = "out";

  net::GeneratorConfig network;
  sim::Workload workload;
  path::AlgoSpec algo;
  std::vector<std::string> compare_algos = {"vanilla", "predictor", "car", "sb", "predictor_car"};

  std::optional<double> tau;  ///< empty: the median training TTLB
  int sweep_points = 20;
  double test_fraction = 0.2;  ///< share of epochs held out for evaluation (the last ones)
  learn::ForestParams forest;

  anon::ClasiParams clasi;
  int user_model = 5;
  anon::GuardMode clasi_guards = anon::GuardMode::shared_pool;

  int metrics_epochs = 30;
  int metrics_streams = 2;
  double days_per_epoch = 1.0;
  anon::CountBasis basis = anon::CountBasis::pooled;
  std::vector<net::Asn> watch = anon::kDefaultWatch;

  ExperimentConfig();

  /// Sets one dotted key from a JSON value. Throws ConfigError for unknown
  /// keys and ill-typed values.
  void set(const std::string& key, const std::string& json_value);

  /// Range and consistency checks across all sections.
  void validate() const;

  /// Canonical flat key/value listing (JSON text per value), sorted by key.
  std::map<std::string, std::string> flatten() const;

  /// 16 hex digits of FNV-1a over the canonical listing plus `salt`.
  std::string hash(const std::string& salt = {}) const;
};

/// Every key `set` accepts.
const std::vector<std::string>& config_keys();

/// "network.client_ratio" -> "TORSELLAB_NETWORK__CLIENT_RATIO".
std::string env_name(const std::string& key);

/// Applies a config file (may be empty for none) and then the environment
/// given as NAME=VALUE strings. Unknown TORSELLAB_* variables are rejected.
ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& environment);

anon::GuardMode guard_mode_from(const std::string& s);
std::string to_string(anon::GuardMode m);
anon::CountBasis basis_from(const std::string& s);
std::string to_string(anon::CountBasis b);

}  // namespace torsel::cli
