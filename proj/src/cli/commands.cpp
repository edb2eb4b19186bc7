#include "torsel/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "torsel/anon/geodesy.hpp"
#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/stats.hpp"
#include "torsel/learn/evaluate.hpp"
#include "torsel/net/io.hpp"

namespace torsel::cli {

namespace fs = std::filesystem;

namespace {

fs::path prepare_outputs(const ExperimentConfig& cfg, const CommandOptions& opt,
                         std::initializer_list<const char*> names) {
  const fs::path dir = cfg.out;
  for (const char* n : names)
    if (fs::exists(dir / n) && !opt.force)
      throw ConfigError("refusing to overwrite " + (dir / n).string() + " (pass --force)");
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
  if (!out.flush()) throw ConfigError("failed writing " + file.string());
}

template <class F>
void write_with(const fs::path& file, F&& fill) {
  std::ostringstream s;
  fill(s);
  write_text(file, s.str());
}

net::NetworkModel load_world(const ExperimentConfig& cfg, const CommandOptions& opt) {
  const fs::path dir = opt.net_dir.empty() ? fs::path(cfg.out) : opt.net_dir;
  for (const char* n : {net::kRelaysFile, net::kEndpointsFile, net::kTopologyFile})
    if (!fs::exists(dir / n))
      throw ConfigError("missing network file " + (dir / n).string() + " (run `generate` first)");
  return net::load_network(dir, cfg.network.fiber_factor, cfg.network.proc_delay_ms);
}

path::AlgoSpec spec_for(const ExperimentConfig& cfg, const std::string& name) {
  path::AlgoSpec s = cfg.algo;
  if (!name.empty()) {
    try {
      s.algo = path::algo_from(name);
    } catch (const SelectionError& e) {
      throw ConfigError(e.what());
    }
  }
  s.validate();
  return s;
}

/// Binary circuit model wrapped as a scorer; empty when the algorithm does
/// not need one.
path::CircuitScorer scorer_for(const path::AlgoSpec& spec, const CommandOptions& opt, const net::NetworkModel& net) {
  if (!spec.needs_model()) return {};
  if (opt.model.empty())
    throw ConfigError(std::string("model required for ") + std::string(path::to_string(spec.algo)) +
                      " (pass --model)");
  std::ifstream in(opt.model);
  if (!in) throw ConfigError("cannot open model " + opt.model.string());
  auto model = std::make_shared<learn::Forest>(learn::Forest::load(in));
  if (model->task() != learn::Task::binary || model->n_features() != learn::kCircuitFeatures)
    throw ConfigError("model " + opt.model.string() + " is not a binary circuit model");
  return [model, &net](const sim::Circuit& c) { return model->score(learn::extract_features(c, net)); };
}

std::vector<sim::StreamRecord> run_algo(const net::NetworkModel& net, const ExperimentConfig& cfg,
                                        const path::AlgoSpec& spec, path::CircuitScorer scorer) {
  path::PolicyInputs in{net, spec, std::move(scorer), cfg.seed, nullptr};
  const auto policies = path::make_policies(in);
  return sim::run_epochs(net, policies, cfg.workload, cfg.seed);
}

std::vector<sim::StreamRecord> read_records_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open records " + file.string());
  auto r = sim::read_records(in);
  if (r.empty()) throw ConfigError("records file " + file.string() + " has no rows");
  return r;
}

std::vector<double> ttlbs(std::span<const sim::StreamRecord> records) {
  std::vector<double> t;
  for (const auto& r : records) t.push_back(r.ttlb_s);
  return t;
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  cfg.validate();
  auto g = cfg.network;
  g.seed = cfg.seed;
  const auto net = net::generate_network(g);
  const auto dir = prepare_outputs(cfg, opt, {net::kRelaysFile, net::kEndpointsFile, net::kTopologyFile});
  net::save_network(dir, net);
  log << "generated " << net.relays().size() << " relays, " << net.clients().size() << " clients, "
      << net.destinations().size() << " destinations in " << dir.string() << '\n';
}

void cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  cfg.validate();
  const auto spec = spec_for(cfg, opt.algo);
  const auto net = load_world(cfg, opt);
  auto scorer = scorer_for(spec, opt, net);
  const auto dir = prepare_outputs(cfg, opt, {"records.csv"});
  const auto records = run_algo(net, cfg, spec, std::move(scorer));
  write_with(dir / "records.csv", [&](std::ostream& o) { sim::write_records(o, records); });
  const auto t = ttlbs(records);
  log << path::to_string(spec.algo) << ": " << records.size() << " streams, median_s "
      << csv::fmt_fixed(stats::median(t)) << ", p90_s " << csv::fmt_fixed(stats::quantile(t, 0.9)) << '\n';
}

void cmd_train(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  cfg.validate();
  const auto net = load_world(cfg, opt);
  const auto records = read_records_file(opt.records.empty() ? fs::path(cfg.out) / "records.csv" : opt.records);
  const auto dir = prepare_outputs(cfg, opt, {"model.txt", "sweep.csv", "train_eval.csv"});

  // Hold out the last epochs. Streams of one epoch share its load state and
  // mostly its circuits, so a random stream split would leak test labels.
  std::vector<std::int64_t> epochs;
  for (const auto& r : records) epochs.push_back(r.epoch);
  std::sort(epochs.begin(), epochs.end());
  epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());
  if (epochs.size() < 2) throw ConfigError("a hold-out split needs records from at least two epochs");
  const auto held = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(epochs.size()) * cfg.test_fraction)), 1,
      epochs.size() - 1);
  const auto first_test = epochs[epochs.size() - held];
  std::vector<sim::StreamRecord> train_rec, test_rec;
  for (const auto& r : records) (r.epoch >= first_test ? test_rec : train_rec).push_back(r);

  const double tau = cfg.tau ? *cfg.tau : stats::median(ttlbs(train_rec));
  const auto train = learn::label_samples(train_rec, net, tau);
  const auto test = learn::label_samples(test_rec, net, tau);
  const auto forest_seed = derive_seed({cfg.seed, 0xf0e57});
  auto model = learn::Forest::train(train.dataset(), cfg.forest, forest_seed);
  model.tau = tau;
  const auto eval = learn::evaluate(model, test);
  const double baseline = learn::majority_baseline(test);

  const auto grid = learn::tau_grid(train, static_cast<std::size_t>(cfg.sweep_points));
  const auto sweep = learn::sweep_tau(train, test, grid, cfg.forest, forest_seed);

  write_with(dir / "model.txt", [&](std::ostream& o) { model.save(o); });
  write_with(dir / "sweep.csv", [&](std::ostream& o) { learn::write_sweep(o, sweep); });
  write_with(dir / "train_eval.csv", [&](std::ostream& o) {
    o << "tau,accuracy,fpr,fnr,baseline,train,test\n"
      << csv::fmt(tau) << ',' << csv::fmt(eval.accuracy) << ',' << csv::fmt(eval.fpr) << ',' << csv::fmt(eval.fnr)
      << ',' << csv::fmt(baseline) << ',' << train.samples.size() << ',' << test.samples.size() << '\n';
  });
  log << "tau " << csv::fmt_fixed(tau) << " s, accuracy " << csv::fmt_fixed(eval.accuracy, 4) << " (majority "
      << csv::fmt_fixed(baseline, 4) << "), fpr " << csv::fmt_fixed(eval.fpr, 4) << ", fnr "
      << csv::fmt_fixed(eval.fnr, 4) << '\n';
}

void cmd_compare(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  cfg.validate();
  const auto names = opt.algos.empty() ? cfg.compare_algos : opt.algos;
  const auto net = load_world(cfg, opt);
  std::vector<path::AlgoSpec> specs;
  for (const auto& n : names) specs.push_back(spec_for(cfg, n));
  // Fail on a missing model before spending time on the other runs.
  std::vector<path::CircuitScorer> scorers;
  for (const auto& s : specs) scorers.push_back(scorer_for(s, opt, net));
  const auto dir = prepare_outputs(cfg, opt, {"compare.csv"});

  std::ostringstream csvout;
  csvout << "algo,median_s,p90_s,median_bw,frac_relays_used,median_len_km\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto records = run_algo(net, cfg, specs[i], scorers[i]);
    std::vector<double> bw, len;
    for (const auto& r : records) {
      const auto& c = r.circuit;
      bw.push_back(static_cast<double>(std::min({net.relay(c.guard).bandwidth, net.relay(c.middle).bandwidth,
                                                 net.relay(c.exit).bandwidth})));
      len.push_back(anon::circuit_length_km(c, net));
    }
    const auto t = ttlbs(records);
    const auto usage = sim::relay_utilization(net, records);
    const auto name = std::string(path::to_string(specs[i].algo));
    csvout << name << ',' << csv::fmt(stats::median(t)) << ',' << csv::fmt(stats::quantile(t, 0.9)) << ','
           << csv::fmt(stats::median(bw)) << ',' << csv::fmt(usage.fraction_used) << ','
           << csv::fmt(stats::median(len)) << '\n';
    log << name << ": median_s " << csv::fmt_fixed(stats::median(t), 4) << ", p90_s "
        << csv::fmt_fixed(stats::quantile(t, 0.9), 4) << ", median_bw " << csv::fmt_fixed(stats::median(bw), 0)
        << ", relays used " << csv::fmt_fixed(usage.fraction_used, 3) << '\n';
  }
  write_text(dir / "compare.csv", csvout.str());
}

void cmd_clasi(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  cfg.validate();
  const auto spec = spec_for(cfg, opt.algo);
  const auto net = load_world(cfg, opt);
  auto scorer = scorer_for(spec, opt, net);
  const auto dir = prepare_outputs(cfg, opt, {"clasi_report.json", "clasi_repeats.csv"});
  anon::PathSimConfig pc;
  pc.spec = spec;
  pc.destinations_per_client = cfg.user_model;
  pc.guard_mode = cfg.clasi_guards;
  pc.seed = cfg.seed;
  const anon::PathSimulator ps(net, pc, std::move(scorer));
  auto params = cfg.clasi;
  params.forest = cfg.forest;
  auto report = anon::clasi_game(ps, params, cfg.seed);
  report.config_hash = cfg.hash(std::string(path::to_string(spec.algo)));
  write_with(dir / "clasi_report.json", [&](std::ostream& o) { anon::write_report(o, report); });
  write_with(dir / "clasi_repeats.csv", [&](std::ostream& o) { anon::write_repeats(o, report); });
  log << path::to_string(spec.algo) << ": epsilon_s " << csv::fmt_fixed(report.epsilon_s, 4) << ", accuracy "
      << csv::fmt_fixed(report.accuracy, 4) << ", baseline " << csv::fmt_fixed(report.baseline, 4);
  if (report.has_ci)
    log << ", ci95 [" << csv::fmt_fixed(report.ci_lo, 4) << ", " << csv::fmt_fixed(report.ci_hi, 4) << "]\n";
  else
    log << ", ci95 unavailable with a single repeat\n";
}

void cmd_metrics(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  cfg.validate();
  const auto net = load_world(cfg, opt);
  std::vector<anon::TimedPath> timeline;
  std::string source;
  if (!opt.records.empty()) {
    for (const auto& r : read_records_file(opt.records))
      timeline.push_back({static_cast<int>(r.epoch), {r.client, r.circuit, r.destination}});
    std::stable_sort(timeline.begin(), timeline.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
    source = opt.records.filename().string();
  } else {
    const auto spec = spec_for(cfg, opt.algo);
    anon::PathSimConfig pc;
    pc.spec = spec;
    pc.destinations_per_client = cfg.user_model;
    pc.guard_mode = anon::GuardMode::sticky;
    pc.seed = cfg.seed;
    const anon::PathSimulator ps(net, pc, scorer_for(spec, opt, net));
    timeline = ps.timeline(cfg.metrics_epochs, cfg.metrics_streams);
    source = std::string(path::to_string(spec.algo));
  }
  const auto dir = prepare_outputs(cfg, opt, {"metrics.csv", "vulnerable.csv", "ttfc_cdf.csv"});

  std::vector<sim::Circuit> circuits;
  std::vector<anon::ClasiPath> paths;
  std::vector<double> len;
  for (const auto& t : timeline) {
    circuits.push_back(t.path.circuit);
    paths.push_back(t.path);
    len.push_back(anon::circuit_length_km(t.path.circuit, net));
  }
  const auto counts = anon::selection_counts(circuits, net, cfg.basis);
  const auto vuln = anon::vulnerable_rate(paths, net, cfg.watch);
  const auto ttfc = anon::time_to_first_compromise(
      timeline, cfg.days_per_epoch, [&](const anon::ClasiPath& p) { return anon::is_vulnerable(p, net, cfg.watch); });
  std::size_t used = 0;
  for (double c : anon::selection_counts(circuits, net)) used += c > 0.0 ? 1 : 0;

  const std::vector<std::pair<std::string, double>> rows = {
      {"streams", static_cast<double>(paths.size())},
      {"gini", anon::gini(counts)},
      {"uniformity", anon::uniformity_degree(counts)},
      {"frac_relays_used", static_cast<double>(used) / static_cast<double>(net.relays().size())},
      {"vulnerable_median", vuln.median},
      {"vulnerable_overall", vuln.overall},
      {"ttfc_median_days", ttfc.median},
      {"ttfc_censored", ttfc.censored},
      {"median_len_km", stats::median(len)},
  };
  write_with(dir / "metrics.csv", [&](std::ostream& o) { anon::write_metrics(o, rows); });
  write_with(dir / "vulnerable.csv", [&](std::ostream& o) {
    o << "client,rate\n";
    for (std::size_t i = 0; i < vuln.clients.size(); ++i) o << vuln.clients[i] << ',' << csv::fmt(vuln.rate[i]) << '\n';
  });
  write_with(dir / "ttfc_cdf.csv", [&](std::ostream& o) {
    o << "day,fraction\n";
    for (const auto& [day, frac] : ttfc.cdf) o << csv::fmt(day) << ',' << csv::fmt(frac) << '\n';
  });
  log << source << " (" << to_string(cfg.basis) << "): gini " << csv::fmt_fixed(rows[1].second, 4) << ", uniformity "
      << csv::fmt_fixed(rows[2].second, 4) << ", vulnerable median " << csv::fmt_fixed(vuln.median, 4)
      << ", ttfc median " << csv::fmt(ttfc.median) << " d, censored " << csv::fmt_fixed(ttfc.censored, 3) << '\n';
}

}  // namespace torsel::cli
