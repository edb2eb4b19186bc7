#include "torsel/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "torsel/common/error.hpp"

namespace torsel::cli {

using nlohmann::json;

namespace {

struct Field {
  std::string key;
  std::function<json()> get;
  std::function<void(const json&)> set;
};

template <class T>
T as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": " + v.dump());
  }
}

template <class T>
Field plain(const std::string& key, T& slot) {
  return {key, [&slot] { return json(slot); }, [&slot, key](const json& v) { slot = as<T>(v, key); }};
}

std::vector<Field> fields(ExperimentConfig& c) {
  std::vector<Field> f;
  f.push_back(plain("seed", c.seed));
  f.push_back(plain("out", c.out));

  auto& n = c.network;
  f.push_back(plain("network.relays", n.relays));
  f.push_back(plain("network.clients", n.clients));
  f.push_back(plain("network.client_ratio", n.client_ratio));
  f.push_back(plain("network.destinations", n.destinations));
  f.push_back(plain("network.guard_fraction", n.guard_fraction));
  f.push_back(plain("network.exit_fraction", n.exit_fraction));
  f.push_back(plain("network.bw_pareto_shape", n.bw_pareto_shape));
  f.push_back(plain("network.bw_pareto_scale", n.bw_pareto_scale));
  f.push_back(plain("network.bw_min", n.bw_min));
  f.push_back(plain("network.bw_max", n.bw_max));
  f.push_back(plain("network.client_ases_per_country", n.client_ases_per_country));
  f.push_back(plain("network.relay_ases", n.relay_ases));
  f.push_back(plain("network.destination_ases", n.destination_ases));
  f.push_back(plain("network.transit_ases", n.transit_ases));
  f.push_back(plain("network.fiber_factor", n.fiber_factor));
  f.push_back(plain("network.proc_delay_ms", n.proc_delay_ms));
  f.push_back({"network.client_countries",
               [&n] {
                 json j = json::object();
                 for (const auto& cs : n.client_countries) j[cs.code] = cs.share;
                 return j;
               },
               [&n](const json& v) {
                 if (!v.is_object()) throw ConfigError("network.client_countries must map country code to share");
                 n.client_countries.clear();
                 for (const auto& [code, share] : v.items())
                   n.client_countries.push_back({code, as<double>(share, "network.client_countries." + code)});
               }});

  f.push_back(plain("workload.file_kib", c.workload.file_kib));
  f.push_back(plain("workload.streams_per_epoch", c.workload.streams_per_epoch));
  f.push_back(plain("workload.epochs", c.workload.epochs));

  f.push_back({"algo.name", [&c] { return json(std::string(path::to_string(c.algo.algo))); },
               [&c](const json& v) {
                 try {
                   c.algo.algo = path::algo_from(as<std::string>(v, "algo.name"));
                 } catch (const SelectionError& e) {
                   throw ConfigError(e.what());
                 }
               }});
  f.push_back(plain("algo.s", c.algo.sb_s));
  f.push_back(plain("algo.max_tries", c.algo.max_tries));
  f.push_back(plain("algo.tau_d", c.algo.tau_d));
  f.push_back(plain("algo.avoid_count", c.algo.avoid_count));
  f.push_back({"compare.algos", [&c] { return json(c.compare_algos); },
               [&c](const json& v) {
                 if (!v.is_array()) throw ConfigError("compare.algos must be a list of algorithm names");
                 c.compare_algos.clear();
                 for (const auto& a : v) c.compare_algos.push_back(as<std::string>(a, "compare.algos"));
               }});

  f.push_back({"learn.tau", [&c] { return c.tau ? json(*c.tau) : json("median"); },
               [&c](const json& v) {
                 if (v.is_string() && v.get<std::string>() == "median") c.tau.reset();
                 else if (v.is_number()) c.tau = v.get<double>();
                 else throw ConfigError("learn.tau must be \"median\" or a number");
               }});
  f.push_back(plain("learn.sweep_points", c.sweep_points));
  f.push_back(plain("learn.test_fraction", c.test_fraction));
  f.push_back(plain("learn.trees", c.forest.n_trees));
  f.push_back(plain("learn.max_depth", c.forest.max_depth));
  f.push_back(plain("learn.min_leaf", c.forest.min_leaf));
  f.push_back(plain("learn.features_per_split", c.forest.features_per_split));
  f.push_back(plain("learn.threads", c.forest.threads));

  f.push_back(plain("clasi.n_train", c.clasi.n_train));
  f.push_back(plain("clasi.n_test", c.clasi.n_test));
  f.push_back(plain("clasi.repeats", c.clasi.repeats));
  f.push_back(plain("clasi.shuffle_labels", c.clasi.shuffle_labels));
  f.push_back(plain("clasi.user_model", c.user_model));
  f.push_back({"clasi.guards", [&c] { return json(to_string(c.clasi_guards)); },
               [&c](const json& v) { c.clasi_guards = guard_mode_from(as<std::string>(v, "clasi.guards")); }});

  f.push_back(plain("metrics.epochs", c.metrics_epochs));
  f.push_back(plain("metrics.streams_per_epoch", c.metrics_streams));
  f.push_back(plain("metrics.days_per_epoch", c.days_per_epoch));
  f.push_back({"metrics.basis", [&c] { return json(to_string(c.basis)); },
               [&c](const json& v) { c.basis = basis_from(as<std::string>(v, "metrics.basis")); }});
  f.push_back({"metrics.watch", [&c] { return json(c.watch); },
               [&c](const json& v) {
                 if (!v.is_array() || v.empty()) throw ConfigError("metrics.watch must be a non-empty list of ASNs");
                 c.watch.clear();
                 for (const auto& a : v) c.watch.push_back(as<net::Asn>(a, "metrics.watch"));
               }});
  return f;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  network.relays = 100;
  network.destinations = 20;
  network.client_ratio = 2.5;
}

void ExperimentConfig::set(const std::string& key, const std::string& json_value) {
  json v;
  try {
    v = json::parse(json_value);
  } catch (const json::parse_error&) {
    v = json_value;  // bare words such as `vanilla` are strings
  }
  for (auto& f : fields(*this))
    if (f.key == key) {
      f.set(v);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
  network.validate();
  workload.validate();
  algo.validate();
  if (compare_algos.empty()) throw ConfigError("compare.algos must not be empty");
  for (const auto& a : compare_algos) {
    try {
      path::algo_from(a);
    } catch (const SelectionError& e) {
      throw ConfigError(std::string("compare.algos: ") + e.what());
    }
  }
  if (tau && !(*tau > 0.0)) throw ConfigError("learn.tau must be positive");
  if (sweep_points < 1) throw ConfigError("learn.sweep_points must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("learn.test_fraction must lie in (0, 1)");
  forest.validate();
  clasi.validate();
  if (user_model != 5 && user_model != 10 && user_model != 15 && user_model != 20)
    throw ConfigError("clasi.user_model must be 5, 10, 15 or 20");
  if (metrics_epochs < 1 || metrics_streams < 1) throw ConfigError("metrics epochs and streams must be >= 1");
  if (!(days_per_epoch > 0.0)) throw ConfigError("metrics.days_per_epoch must be positive");
  if (out.empty()) throw ConfigError("out must not be empty");
}

std::map<std::string, std::string> ExperimentConfig::flatten() const {
  std::map<std::string, std::string> m;
  for (const auto& f : fields(const_cast<ExperimentConfig&>(*this))) m[f.key] = f.get().dump();
  return m;
}

std::string ExperimentConfig::hash(const std::string& salt) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& [k, v] : flatten()) {
    if (k == "out") continue;  // where results go does not change them
    feed(k);
    feed(v);
  }
  feed(salt);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    ExperimentConfig c;
    std::vector<std::string> k;
    for (const auto& f : fields(c)) k.push_back(f.key);
    return k;
  }();
  return keys;
}

std::string env_name(const std::string& key) {
  std::string s = "TORSELLAB_";
  for (char ch : key) {
    if (ch == '.') s += "__";
    else s += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return s;
}

ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& environment) {
  ExperimentConfig c;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object of dotted keys");
    for (const auto& [k, v] : j.items()) c.set(k, v.dump());
  }
  std::map<std::string, std::string> by_env;
  for (const auto& k : config_keys()) by_env[env_name(k)] = k;
  for (const auto& kv : environment) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || kv.rfind("TORSELLAB_", 0) != 0) continue;
    const auto name = kv.substr(0, eq);
    const auto it = by_env.find(name);
    if (it == by_env.end()) throw ConfigError("unknown environment override " + name);
    c.set(it->second, kv.substr(eq + 1));
  }
  return c;
}

anon::GuardMode guard_mode_from(const std::string& s) {
  if (s == "shared_pool") return anon::GuardMode::shared_pool;
  if (s == "sticky") return anon::GuardMode::sticky;
  if (s == "pinned_per_as") return anon::GuardMode::pinned_per_as;
  throw ConfigError("unknown guard mode '" + s + "' (shared_pool, sticky, pinned_per_as)");
}

std::string to_string(anon::GuardMode m) {
  switch (m) {
    case anon::GuardMode::shared_pool: return "shared_pool";
    case anon::GuardMode::sticky: return "sticky";
    case anon::GuardMode::pinned_per_as: return "pinned_per_as";
  }
  return "?";
}

anon::CountBasis basis_from(const std::string& s) {
  if (s == "pooled") return anon::CountBasis::pooled;
  if (s == "guard") return anon::CountBasis::guard;
  if (s == "middle") return anon::CountBasis::middle;
  if (s == "exit") return anon::CountBasis::exit;
  if (s == "guard_exit") return anon::CountBasis::guard_exit;
  throw ConfigError("unknown count basis '" + s + "' (pooled, guard, middle, exit, guard_exit)");
}

std::string to_string(anon::CountBasis b) {
  switch (b) {
    case anon::CountBasis::pooled: return "pooled";
    case anon::CountBasis::guard: return "guard";
    case anon::CountBasis::middle: return "middle";
    case anon::CountBasis::exit: return "exit";
    case anon::CountBasis::guard_exit: return "guard_exit";
  }
  return "?";
}

}  // namespace torsel::cli
