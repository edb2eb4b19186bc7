// torsellab: generate worlds, run path-selection experiments, measure
// performance and anonymity.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torsel/cli/commands.hpp"
#include "torsel/common/error.hpp"

extern char** environ;

namespace {

constexpr int kUsage = 2;
constexpr int kDegenerate = 3;

std::vector<std::string> environment() {
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) env.emplace_back(*e);
  return env;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace torsel::cli;

  CLI::App app{"Tor path-selection lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> sets;
  CommandOptions opt;
  std::string net_dir, model, records, algos;

  app.add_option("--config", config_path, "JSON config of dotted keys")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "experiment seed (overrides config)");
  app.add_option("--out", out, "output directory (overrides config)");
  app.add_flag("--force", opt.force, "overwrite existing outputs");
  app.add_option("--set", sets, "KEY=VALUE config override, repeatable");

  auto* gen = app.add_subcommand("generate", "write a synthetic world");
  auto* simulate = app.add_subcommand("simulate", "run one algorithm and write records.csv");
  auto* train = app.add_subcommand("train", "train the circuit classifier on records");
  auto* compare = app.add_subcommand("compare", "run several algorithms on one world");
  auto* clasi = app.add_subcommand("clasi", "play the sender-location game");
  auto* metrics = app.add_subcommand("metrics", "selection, vulnerability and TTFC metrics");
  for (auto* sc : {gen, simulate, train, compare, clasi, metrics}) sc->fallthrough();
  for (auto* sc : {simulate, train, compare, clasi, metrics})
    sc->add_option("--net", net_dir, "world directory (default: output directory)");
  for (auto* sc : {simulate, compare, clasi, metrics})
    sc->add_option("--model", model, "trained model for predictor variants");
  for (auto* sc : {simulate, clasi, metrics}) sc->add_option("--algo", opt.algo, "algorithm (overrides algo.name)");
  train->add_option("--records", records, "records.csv to train on (default: <out>/records.csv)");
  metrics->add_option("--records", records, "score these records instead of generated paths");
  compare->add_option("--algos", algos, "comma-separated algorithms (overrides compare.algos)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    auto cfg = load_config(config_path, environment());
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw torsel::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    opt.net_dir = net_dir;
    opt.model = model;
    opt.records = records;
    if (!algos.empty()) {
      std::stringstream ss(algos);
      for (std::string a; std::getline(ss, a, ',');)
        if (!a.empty()) opt.algos.push_back(a);
    }

    if (*gen) cmd_generate(cfg, opt, std::cout);
    else if (*simulate) cmd_simulate(cfg, opt, std::cout);
    else if (*train) cmd_train(cfg, opt, std::cout);
    else if (*compare) cmd_compare(cfg, opt, std::cout);
    else if (*clasi) cmd_clasi(cfg, opt, std::cout);
    else if (*metrics) cmd_metrics(cfg, opt, std::cout);
    return 0;
  } catch (const torsel::DegenerateDataError& e) {
    std::cerr << "torsellab: " << e.what() << '\n';
    return kDegenerate;
  } catch (const torsel::Error& e) {
    std::cerr << "torsellab: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "torsellab: unexpected failure: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
}
