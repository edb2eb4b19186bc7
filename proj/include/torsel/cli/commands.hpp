#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "torsel/cli/config.hpp"

namespace torsel::cli {

struct CommandOptions {
  std::filesystem::path net_dir;   ///< world to load; empty: the output directory
  std::filesystem::path model;     ///< trained model for the PredicTor variants
  std::filesystem::path records;   ///< records.csv input; empty: <out>/records.csv where needed
  std::string algo;                ///< overrides algo.name
  std::vector<std::string> algos;  ///< overrides compare.algos
  bool force = false;              ///< allow overwriting existing outputs
};

// Each command validates the configuration, writes its outputs under
// cfg.out and prints a short summary to `log`. Errors are thrown; the
// executable maps them onto exit codes.

/// relays.csv, endpoints.csv, topology.json
void cmd_generate(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log);
/// records.csv
void cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log);
/// model.txt, sweep.csv, train_eval.csv
void cmd_train(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log);
/// compare.csv
void cmd_compare(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log);
/// clasi_report.json, clasi_repeats.csv
void cmd_clasi(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log);
/// metrics.csv, vulnerable.csv, ttfc_cdf.csv
void cmd_metrics(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log);

}  // namespace torsel::cli
