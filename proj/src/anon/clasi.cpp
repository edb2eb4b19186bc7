#include "torsel/anon/clasi.hpp"

#include <ostream>
#include <set>

#include <json.hpp>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/stats.hpp"
#include "torsel/learn/features.hpp"

namespace torsel::anon {

void ClasiParams::validate() const {
  if (n_train < 100) throw ConfigError("clasi.n_train must be >= 100");
  if (n_test < 1) throw ConfigError("clasi.n_test must be >= 1");
  if (repeats < 1) throw ConfigError("clasi.repeats must be >= 1");
  forest.validate();
}

namespace {
learn::Dataset to_dataset(std::span<const ClasiPath> paths, const net::NetworkModel& net) {
  learn::Dataset d;
  for (const auto& p : paths)
    d.add(learn::extract_features(p.circuit, net, p.destination), net.client(p.client).asn);
  return d;
}
}  // namespace

LeakageReport clasi_game(const PathSimulator& ps, const ClasiParams& params, std::uint64_t seed) {
  params.validate();
  const auto& net = ps.network();
  std::set<net::Asn> sender_ases;
  for (const auto& c : net.clients()) sender_ases.insert(c.asn);
  if (sender_ases.size() < 2)
    throw DegenerateDataError("CLASI needs at least two sender ASes, the world has " +
                              std::to_string(sender_ases.size()));

  LeakageReport r;
  r.baseline = 1.0 / static_cast<double>(sender_ases.size());
  r.repeats = params.repeats;
  for (int k = 0; k < params.repeats; ++k) {
    const auto rk = static_cast<std::uint64_t>(k);
    const auto train_paths = ps.generate(params.n_train, derive_seed({seed, 0xc1a5, rk, 1}));
    auto train = to_dataset(train_paths, net);
    if (params.shuffle_labels) {
      Rng rng(derive_seed({seed, 0x5ff1e, rk}));
      rng.shuffle(train.y);
    }
    const auto model =
        learn::Forest::train(train, params.forest, derive_seed({seed, 0xf0e57, rk}), learn::Task::multiclass);
    // The challenger hands over the path without its sender; the label is
    // kept aside for scoring only.
    const auto test_paths = ps.generate(params.n_test, derive_seed({seed, 0xc1a5, rk, 2}));
    std::size_t correct = 0;
    for (const auto& p : test_paths) {
      const auto x = learn::extract_features(p.circuit, net, p.destination);
      correct += model.predict(x) == net.client(p.client).asn ? 1 : 0;
    }
    r.repeat_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test_paths.size()));
  }
  r.accuracy = stats::mean(r.repeat_accuracy);
  r.epsilon_s = r.accuracy - r.baseline;
  if (r.repeat_accuracy.size() >= 2) {
    std::vector<double> eps;
    for (double a : r.repeat_accuracy) eps.push_back(a - r.baseline);
    std::tie(r.ci_lo, r.ci_hi) = stats::t_interval(eps, 0.95);
    r.has_ci = true;
  }
  return r;
}

void write_report(std::ostream& out, const LeakageReport& r) {
  nlohmann::ordered_json j;
  j["epsilon_s"] = r.epsilon_s;
  j["baseline"] = r.baseline;
  j["accuracy"] = r.accuracy;
  if (r.has_ci) {
    j["ci95"] = {r.ci_lo, r.ci_hi};
  } else {
    j["ci95"] = nullptr;
    j["note"] = "confidence interval unavailable with a single repeat";
  }
  j["repeats"] = r.repeats;
  j["config_hash"] = r.config_hash;
  out << j.dump(2) << '\n';
}

void write_repeats(std::ostream& out, const LeakageReport& r) {
  out << "repeat,accuracy,epsilon_s\n";
  for (std::size_t i = 0; i < r.repeat_accuracy.size(); ++i)
    out << i << ',' << csv::fmt(r.repeat_accuracy[i]) << ',' << csv::fmt(r.repeat_accuracy[i] - r.baseline) << '\n';
}

}  // namespace torsel::anon
