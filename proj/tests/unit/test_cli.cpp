#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "torsel/cli/commands.hpp"
#include "torsel/cli/config.hpp"
#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/stats.hpp"
#include "torsel/learn/forest.hpp"
#include "torsel/net/io.hpp"

using namespace torsel;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("torsel_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

cli::ExperimentConfig small(const fs::path& out) {
  cli::ExperimentConfig c;
  c.out = out.string();
  c.set("network.relays", "30");
  c.set("network.clients", "60");
  c.set("network.destinations", "10");
  c.set("workload.epochs", "3");
  c.set("learn.trees", "10");
  c.set("learn.threads", "1");
  c.set("learn.sweep_points", "4");
  return c;
}

}  // namespace

TEST_CASE("config keys and values") {
  cli::ExperimentConfig c;
  CHECK(c.seed == 42);
  c.set("network.client_ratio", "3.5");
  CHECK(c.network.client_ratio == 3.5);
  c.set("algo.name", "\"sb\"");
  CHECK(c.algo.algo == path::Algo::sb);
  c.set("algo.name", "predictor");  // bare text is taken as a string
  CHECK(c.algo.algo == path::Algo::predictor);
  c.set("learn.tau", "0.75");
  CHECK(c.tau == 0.75);
  c.set("learn.tau", "\"median\"");
  CHECK_FALSE(c.tau.has_value());
  c.set("compare.algos", "[\"vanilla\",\"car\"]");
  CHECK(c.compare_algos == std::vector<std::string>{"vanilla", "car"});
  c.set("metrics.watch", "[3356]");
  CHECK(c.watch == std::vector<net::Asn>{3356});

  CHECK_THROWS_AS(c.set("network.bogus", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("network.relays", "\"many\""), ConfigError);
  CHECK_THROWS_AS(c.set("algo.name", "\"tor\""), ConfigError);

  for (const auto& k : cli::config_keys()) CHECK(c.flatten().count(k) == 1);
  CHECK(cli::env_name("network.client_ratio") == "TORSELLAB_NETWORK__CLIENT_RATIO");
}

TEST_CASE("config validation") {
  cli::ExperimentConfig c;
  c.validate();
  c.set("network.client_ratio", "0");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  cli::ExperimentConfig d;
  d.set("learn.test_fraction", "1.5");
  CHECK_THROWS_AS(d.validate(), ConfigError);
  cli::ExperimentConfig e;
  e.set("clasi.user_model", "7");
  CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("config layering") {
  Scratch s("config");
  const auto file = s.dir / "cfg.json";
  std::ofstream(file) << R"({"network.relays": 80, "workload.file_kib": 50, "seed": 7})";

  auto c = cli::load_config(file, {"PATH=/bin", "TORSELLAB_NETWORK__RELAYS=90"});
  CHECK(c.network.relays == 90);
  CHECK(c.workload.file_kib == 50.0);
  CHECK(c.seed == 7);

  CHECK_THROWS_AS(cli::load_config(file, {"TORSELLAB_NETWORK__RELAYZ=1"}), ConfigError);
  CHECK_THROWS_AS(cli::load_config(s.dir / "missing.json", {}), ConfigError);
  std::ofstream(s.dir / "nested.json") << R"({"network": {"relays": 80}})";
  CHECK_THROWS_AS(cli::load_config(s.dir / "nested.json", {}), ConfigError);
  std::ofstream(s.dir / "broken.json") << "{";
  CHECK_THROWS_AS(cli::load_config(s.dir / "broken.json", {}), ConfigError);
  CHECK(cli::load_config({}, {}).network.relays == cli::ExperimentConfig{}.network.relays);
}

TEST_CASE("config hash") {
  cli::ExperimentConfig a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.out = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.set("seed", "43");
  CHECK(a.hash() != b.hash());
  CHECK(a.hash("x") != a.hash("y"));
}

TEST_CASE("enum names") {
  for (auto m : {anon::GuardMode::shared_pool, anon::GuardMode::sticky, anon::GuardMode::pinned_per_as})
    CHECK(cli::guard_mode_from(cli::to_string(m)) == m);
  for (auto b : {anon::CountBasis::pooled, anon::CountBasis::guard, anon::CountBasis::middle, anon::CountBasis::exit,
                 anon::CountBasis::guard_exit})
    CHECK(cli::basis_from(cli::to_string(b)) == b);
  CHECK_THROWS_AS(cli::basis_from("pairs"), ConfigError);
}

TEST_CASE("command pipeline") {
  Scratch s("pipeline");
  auto cfg = small(s.dir / "run");
  std::ostringstream log;
  cli::CommandOptions opt;

  cli::cmd_generate(cfg, opt, log);
  for (const char* f : {net::kRelaysFile, net::kEndpointsFile, net::kTopologyFile}) REQUIRE(fs::exists(s.dir / "run" / f));
  const auto world = net::load_network(s.dir / "run");
  CHECK(world.relays().size() == 30);
  const auto relays = slurp(s.dir / "run" / net::kRelaysFile);
  CHECK_THROWS_AS(cli::cmd_generate(cfg, opt, log), ConfigError);
  opt.force = true;
  cli::cmd_generate(cfg, opt, log);
  CHECK(slurp(s.dir / "run" / net::kRelaysFile) == relays);

  cli::cmd_simulate(cfg, opt, log);
  const auto records = slurp(s.dir / "run" / "records.csv");
  std::istringstream rin(records);
  const auto recs = sim::read_records(rin);
  CHECK(recs.size() == 60 * 2 * 3);
  cli::cmd_simulate(cfg, opt, log);
  CHECK(slurp(s.dir / "run" / "records.csv") == records);

  auto pred = opt;
  pred.algo = "predictor";
  try {
    cli::cmd_simulate(cfg, pred, log);
    FAIL("expected a missing-model error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model required") != std::string::npos);
  }

  cli::cmd_train(cfg, opt, log);
  std::ifstream min(s.dir / "run" / "model.txt");
  const auto model = learn::Forest::load(min);
  CHECK(model.tau > 0.0);
  std::ifstream sweep(s.dir / "run" / "sweep.csv");
  CHECK(csv::read_lines(sweep).size() == 1 + 4);

  auto explicit_tau = cfg;
  explicit_tau.set("out", "\"" + (s.dir / "tau").string() + "\"");
  fs::create_directories(s.dir / "tau");
  fs::copy_file(s.dir / "run" / "records.csv", s.dir / "tau" / "records.csv");
  const double lo = std::min_element(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.ttlb_s < b.ttlb_s; })->ttlb_s;
  const double hi = std::max_element(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.ttlb_s < b.ttlb_s; })->ttlb_s;
  auto tau_opt = opt;
  tau_opt.net_dir = s.dir / "run";
  const double mid = 0.5 * (lo + hi);
  explicit_tau.set("learn.tau", csv::fmt(mid));
  cli::cmd_train(explicit_tau, tau_opt, log);
  std::ifstream tin(s.dir / "tau" / "model.txt");
  CHECK(learn::Forest::load(tin).tau == mid);
  explicit_tau.set("learn.tau", std::to_string(lo / 2));
  CHECK_THROWS_AS(cli::cmd_train(explicit_tau, tau_opt, log), DegenerateDataError);

  auto cmp = opt;
  cmp.algos = {"vanilla"};
  cli::cmd_compare(cfg, cmp, log);
  std::ifstream cin_(s.dir / "run" / "compare.csv");
  const auto rows = csv::read_lines(cin_);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "algo,median_s,p90_s,median_bw,frac_relays_used,median_len_km");
  CHECK(rows[1].rfind("vanilla,", 0) == 0);
}

TEST_CASE("median tau policy") {
  Scratch s("median");
  auto cfg = small(s.dir);
  std::ostringstream log;
  cli::CommandOptions opt;
  cli::cmd_generate(cfg, opt, log);
  cli::cmd_simulate(cfg, opt, log);
  cli::cmd_train(cfg, opt, log);

  // The model records the median TTLB of the training part of the split.
  std::ifstream ev(s.dir / "train_eval.csv");
  const auto lines = csv::read_lines(ev);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "tau,accuracy,fpr,fnr,baseline,train,test");
  const auto f = csv::split(lines[1]);
  std::ifstream min(s.dir / "model.txt");
  CHECK(csv::to_double(f[0], 2) == doctest::Approx(learn::Forest::load(min).tau).epsilon(1e-12));
  CHECK(csv::to_int(f[5], 2) + csv::to_int(f[6], 2) == 360);
}

TEST_CASE("leakage and metrics commands") {
  Scratch s("anon");
  auto cfg = small(s.dir);
  cfg.set("clasi.n_train", "300");
  cfg.set("clasi.n_test", "100");
  cfg.set("clasi.repeats", "1");
  cfg.set("metrics.epochs", "4");
  std::ostringstream log;
  cli::CommandOptions opt;
  cli::cmd_generate(cfg, opt, log);

  cli::cmd_clasi(cfg, opt, log);
  const auto report = nlohmann::json::parse(slurp(s.dir / "clasi_report.json"));
  CHECK(report["ci95"].is_null());
  CHECK(report.contains("note"));
  CHECK(report["repeats"] == 1);

  cli::cmd_metrics(cfg, opt, log);
  std::ifstream m(s.dir / "metrics.csv");
  const auto rows = csv::read_lines(m);
  REQUIRE_FALSE(rows.empty());
  CHECK(rows[0] == "metric,value");
  std::vector<std::string> names;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!rows[i].empty()) names.push_back(csv::split(rows[i])[0]);
  CHECK(names == std::vector<std::string>{"streams", "gini", "uniformity", "frac_relays_used", "vulnerable_median",
                                          "vulnerable_overall", "ttfc_median_days", "ttfc_censored", "median_len_km"});
  CHECK(fs::exists(s.dir / "vulnerable.csv"));
  CHECK(fs::exists(s.dir / "ttfc_cdf.csv"));
}

TEST_CASE("missing inputs") {
  Scratch s("missing");
  auto cfg = small(s.dir);
  std::ostringstream log;
  CHECK_THROWS_AS(cli::cmd_simulate(cfg, {}, log), ConfigError);
  cli::cmd_generate(cfg, {}, log);
  CHECK_THROWS_AS(cli::cmd_train(cfg, {}, log), ConfigError);
}
