#include "torsel/net/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <map>
#include <set>

#include "torsel/common/error.hpp"
#include "torsel/common/rng.hpp"

namespace torsel::net {

NetworkModel::NetworkModel(std::vector<Relay> relays, std::vector<Endpoint> clients,
                           std::vector<Endpoint> destinations, AsTopology topology,
                           double fiber_factor, double proc_delay_ms)
    : relays_(std::move(relays)),
      clients_(std::move(clients)),
      destinations_(std::move(destinations)),
      fiber_factor_(fiber_factor),
      proc_delay_ms_(proc_delay_ms) {
  if (!(fiber_factor_ > 0.0 && fiber_factor_ <= 1.0))
    throw ValidationError("fiber_factor must be in (0, 1]");
  if (proc_delay_ms_ < 0.0) throw ValidationError("proc_delay_ms must be non-negative");
  topology.validate();
  paths_ = std::make_shared<AsPathOracle>(std::move(topology));

  std::set<std::int64_t> ids;
  auto claim = [&](std::int64_t id, Asn asn) {
    if (!ids.insert(id).second) throw ValidationError("duplicate id " + std::to_string(id));
    if (!paths_->topology().contains(asn))
      throw ValidationError("id " + std::to_string(id) + " sits in AS " + std::to_string(asn) +
                            " which the topology does not know");
  };
  for (std::size_t i = 0; i < relays_.size(); ++i) {
    validate(relays_[i]);
    claim(relays_[i].id, relays_[i].asn);
    relay_index_.emplace(relays_[i].id, i);
  }
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    validate(clients_[i]);
    if (clients_[i].kind != EndpointKind::client)
      throw ValidationError("endpoint " + std::to_string(clients_[i].id) + " is not a client");
    claim(clients_[i].id, clients_[i].asn);
    client_index_.emplace(clients_[i].id, i);
  }
  for (std::size_t i = 0; i < destinations_.size(); ++i) {
    validate(destinations_[i]);
    if (destinations_[i].kind != EndpointKind::destination)
      throw ValidationError("endpoint " + std::to_string(destinations_[i].id) +
                            " is not a destination");
    claim(destinations_[i].id, destinations_[i].asn);
    destination_index_.emplace(destinations_[i].id, i);
  }
}

std::size_t NetworkModel::relay_index(RelayId id) const {
  const auto it = relay_index_.find(id);
  if (it == relay_index_.end()) throw LookupError("unknown relay id " + std::to_string(id));
  return it->second;
}

const Relay& NetworkModel::relay(RelayId id) const { return relays_[relay_index(id)]; }

std::size_t NetworkModel::client_index(EndpointId id) const {
  const auto it = client_index_.find(id);
  if (it == client_index_.end()) throw LookupError("unknown client id " + std::to_string(id));
  return it->second;
}

const Endpoint& NetworkModel::client(EndpointId id) const { return clients_[client_index(id)]; }

std::size_t NetworkModel::destination_index(EndpointId id) const {
  const auto it = destination_index_.find(id);
  if (it == destination_index_.end())
    throw LookupError("unknown destination id " + std::to_string(id));
  return it->second;
}

const Endpoint& NetworkModel::destination(EndpointId id) const {
  return destinations_[destination_index(id)];
}

bool operator==(const NetworkModel& a, const NetworkModel& b) {
  return a.relays_ == b.relays_ && a.clients_ == b.clients_ &&
         a.destinations_ == b.destinations_ && a.topology() == b.topology() &&
         a.fiber_factor_ == b.fiber_factor_ && a.proc_delay_ms_ == b.proc_delay_ms_;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

struct CountryBox {
  const char* code;
  double lat_min, lat_max, lon_min, lon_max;
};

// Coarse bounding boxes; only relative distances matter.
constexpr CountryBox kCountries[] = {
    {"US", 30.0, 47.0, -122.0, -75.0}, {"RU", 45.0, 60.0, 30.0, 60.0},
    {"DE", 47.5, 54.5, 6.0, 14.5},     {"FR", 43.5, 50.5, -1.0, 7.0},
    {"UA", 46.5, 51.5, 23.0, 39.0},    {"GB", 50.5, 57.5, -4.5, 1.5},
    {"IN", 10.0, 30.0, 72.0, 88.0},    {"ID", -8.0, 3.0, 98.0, 125.0},
    {"NL", 51.0, 53.3, 4.0, 7.0},      {"BR", -30.0, -5.0, -55.0, -38.0},
    {"SE", 56.0, 64.0, 12.0, 19.0},    {"CA", 43.0, 53.0, -123.0, -64.0},
    {"CH", 46.0, 47.7, 6.2, 10.2},     {"RO", 44.0, 48.0, 21.0, 28.5},
    {"FI", 60.0, 66.0, 22.0, 29.0},    {"AT", 46.5, 48.8, 9.8, 16.8},
    {"PL", 49.5, 54.5, 14.5, 23.5},    {"JP", 33.0, 43.0, 130.0, 142.0},
    {"SG", 1.25, 1.45, 103.65, 103.95}, {"IE", 51.5, 55.2, -10.0, -6.0},
};

const CountryBox& box_for(const std::string& code) {
  for (const auto& b : kCountries)
    if (code == b.code) return b;
  throw ValidationError("no geography for country '" + code + "'");
}

// Hosting-heavy relay geography and content-heavy destination geography.
const std::vector<CountryShare> kRelayCountries = {
    {"DE", 0.24}, {"US", 0.20}, {"FR", 0.11}, {"NL", 0.09}, {"RU", 0.05},
    {"SE", 0.04}, {"CA", 0.04}, {"GB", 0.04}, {"CH", 0.04}, {"RO", 0.03},
    {"FI", 0.03}, {"AT", 0.03}, {"PL", 0.03}, {"SG", 0.03},
};
const std::vector<CountryShare> kDestinationCountries = {
    {"US", 0.55}, {"DE", 0.10}, {"GB", 0.08}, {"NL", 0.08}, {"IE", 0.07},
    {"FR", 0.05}, {"JP", 0.04}, {"SG", 0.03},
};

// Order matters: DeNASA-style guard filters avoid a prefix of this list.
constexpr Asn kTier1[] = {3356, 1299, 64601, 64602, 64603, 64604, 64605, 64606};
constexpr double kTier1Weight[] = {0.28, 0.24, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08};
constexpr Asn kTransitBase = 64700;
constexpr Asn kStubBase = 65000;

GeoPoint sample_in(const CountryBox& b, Rng& rng) {
  return {b.lat_min + rng.uniform() * (b.lat_max - b.lat_min),
          b.lon_min + rng.uniform() * (b.lon_max - b.lon_min)};
}

std::string pick_country(const std::vector<CountryShare>& table, Rng& rng) {
  std::vector<double> w;
  for (const auto& c : table) w.push_back(c.share);
  return table[rng.weighted_index(w)].code;
}

// Distinct draws without replacement, weighted.
std::vector<std::size_t> pick_distinct(std::vector<double> weights, std::size_t k, Rng& rng) {
  std::vector<std::size_t> out;
  k = std::min(k, weights.size());
  while (out.size() < k) {
    const auto i = rng.weighted_index(weights);
    if (i >= weights.size()) break;
    out.push_back(i);
    weights[i] = 0.0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct StubAs {
  Asn asn;
  std::string country;
};

}  // namespace

const std::vector<std::string>& default_client_countries() {
  static const std::vector<std::string> codes = {"US", "RU", "DE", "FR", "UA",
                                                 "GB", "IN", "ID", "NL", "BR"};
  return codes;
}

std::int64_t GeneratorConfig::resolved_clients() const {
  if (clients > 0) return clients;
  return std::max<std::int64_t>(1, std::llround(client_ratio * static_cast<double>(relays)));
}

void GeneratorConfig::validate() const {
  if (relays <= 0) throw ConfigError("network.relays must be > 0");
  if (clients < 0) throw ConfigError("network.clients must be >= 0");
  if (!(client_ratio > 0.0)) throw ConfigError("network.client_ratio must be > 0");
  if (destinations <= 0) throw ConfigError("network.destinations must be > 0");
  if (guard_fraction < 0.0 || guard_fraction > 1.0 || exit_fraction < 0.0 || exit_fraction > 1.0)
    throw ConfigError("flag fractions must lie in [0, 1]");
  if (!(bw_pareto_shape > 0.0) || !(bw_pareto_scale > 0.0))
    throw ConfigError("bandwidth Pareto parameters must be positive");
  if (bw_min <= 0 || bw_max < bw_min) throw ConfigError("bandwidth bounds must satisfy 0 < min <= max");
  if (client_ases_per_country < 1 || relay_ases < 1 || destination_ases < 1 || transit_ases < 1)
    throw ConfigError("AS counts must be >= 1");
  for (const auto& c : client_countries) {
    if (!valid_country(c.code)) throw ConfigError("bad client country '" + c.code + "'");
    if (!(c.share > 0.0)) throw ConfigError("client country shares must be positive");
  }
  if (!(fiber_factor > 0.0 && fiber_factor <= 1.0)) throw ConfigError("fiber_factor must be in (0, 1]");
}

NetworkModel generate_network(const GeneratorConfig& cfg) {
  cfg.validate();
  // Independent streams per concern so that changing one count does not
  // reshuffle unrelated parts of the world.
  Rng topo_rng(derive_seed({cfg.seed, 1}));
  Rng relay_rng(derive_seed({cfg.seed, 2}));
  Rng client_rng(derive_seed({cfg.seed, 3}));
  Rng dest_rng(derive_seed({cfg.seed, 4}));

  AsTopology topo;
  topo.seed = cfg.seed;
  topo.tier1.assign(std::begin(kTier1), std::end(kTier1));
  const std::vector<double> tier1_w(std::begin(kTier1Weight), std::end(kTier1Weight));

  std::vector<Asn> transits;
  for (int i = 1; i <= cfg.transit_ases; ++i) {
    const Asn asn = kTransitBase + i;
    const std::size_t n_up = topo_rng.uniform() < 0.5 ? 1 : 2;
    std::vector<Asn> ups;
    for (auto idx : pick_distinct(tier1_w, n_up, topo_rng)) ups.push_back(kTier1[idx]);
    topo.edges[asn] = ups;
    transits.push_back(asn);
  }
  // Zipf-like transit popularity: a few regional carriers serve most stubs.
  std::vector<double> transit_w;
  for (std::size_t i = 0; i < transits.size(); ++i) transit_w.push_back(1.0 / static_cast<double>(i + 1));

  Asn next_stub = kStubBase + 1;
  auto new_stub = [&](const std::string& country) {
    const Asn asn = next_stub++;
    const std::size_t n_up = topo_rng.uniform() < 0.5 ? 1 : 2;
    std::vector<Asn> ups;
    for (auto idx : pick_distinct(transit_w, n_up, topo_rng)) ups.push_back(transits[idx]);
    topo.edges[asn] = ups;
    return StubAs{asn, country};
  };

  // Client ASes: a fixed number per client country.
  std::vector<CountryShare> client_countries = cfg.client_countries;
  if (client_countries.empty())
    for (const auto& c : default_client_countries()) client_countries.push_back({c, 1.0});
  std::vector<std::vector<StubAs>> client_ases(client_countries.size());
  for (std::size_t c = 0; c < client_countries.size(); ++c)
    for (int k = 0; k < cfg.client_ases_per_country; ++k)
      client_ases[c].push_back(new_stub(client_countries[c].code));

  std::vector<StubAs> relay_ases;
  for (int i = 0; i < cfg.relay_ases; ++i) relay_ases.push_back(new_stub(pick_country(kRelayCountries, topo_rng)));
  std::vector<StubAs> dest_ases;
  for (int i = 0; i < cfg.destination_ases; ++i)
    dest_ases.push_back(new_stub(pick_country(kDestinationCountries, topo_rng)));

  // Relays.
  std::vector<double> relay_as_w;
  for (std::size_t i = 0; i < relay_ases.size(); ++i) relay_as_w.push_back(1.0 / std::sqrt(static_cast<double>(i + 1)));
  std::vector<Relay> relays;
  relays.reserve(static_cast<std::size_t>(cfg.relays));
  for (std::int64_t i = 0; i < cfg.relays; ++i) {
    Relay r;
    r.id = i;
    char nick[32];
    std::snprintf(nick, sizeof nick, "relay%04lld", static_cast<long long>(i));
    r.nickname = nick;
    const double u = 1.0 - relay_rng.uniform();  // (0, 1]
    const double pareto = cfg.bw_pareto_scale * std::pow(u, -1.0 / cfg.bw_pareto_shape);
    r.bandwidth = std::clamp<std::int64_t>(std::llround(std::min(pareto, 1e12)), cfg.bw_min, cfg.bw_max);
    const auto& as = relay_ases[relay_rng.weighted_index(relay_as_w)];
    r.asn = as.asn;
    r.country = as.country;
    const auto loc = sample_in(box_for(as.country), relay_rng);
    r.lat = loc.lat;
    r.lon = loc.lon;
    r.is_guard = relay_rng.uniform() < cfg.guard_fraction;
    r.is_exit = relay_rng.uniform() < cfg.exit_fraction;
    relays.push_back(std::move(r));
  }
  // Every world must offer at least one guard and one exit, on different
  // relays whenever there are two or more. Fixes go to the fattest relays.
  std::vector<std::size_t> by_bw(relays.size());
  std::iota(by_bw.begin(), by_bw.end(), std::size_t{0});
  std::stable_sort(by_bw.begin(), by_bw.end(),
                   [&](auto x, auto y) { return relays[x].bandwidth > relays[y].bandwidth; });
  if (std::none_of(relays.begin(), relays.end(), [](const Relay& r) { return r.is_guard; }))
    relays[by_bw.front()].is_guard = true;
  auto guard_other_than = [&](std::size_t i) {
    for (std::size_t j = 0; j < relays.size(); ++j)
      if (j != i && relays[j].is_guard) return true;
    return false;
  };
  bool exit_ok = false;
  for (std::size_t i = 0; i < relays.size(); ++i)
    if (relays[i].is_exit && (relays.size() == 1 || guard_other_than(i))) exit_ok = true;
  if (!exit_ok) {
    for (auto i : by_bw)
      if (relays.size() == 1 || guard_other_than(i)) {
        relays[i].is_exit = true;
        break;
      }
  }

  // Every client AS must reach some guard without crossing a tier-1 AS,
  // otherwise the strictest guard filter starves it. A client AS without
  // such a guard gains one uplink to a transit drawn by the guard bandwidth
  // it serves.
  std::map<Asn, double> guard_bw_by_transit;
  for (const auto& r : relays)
    if (r.is_guard)
      for (Asn t : topo.edges.at(r.asn)) guard_bw_by_transit[t] += static_cast<double>(r.bandwidth);
  std::vector<Asn> guard_transits;
  std::vector<double> guard_transit_w;
  for (const auto& [t, w] : guard_bw_by_transit) {
    guard_transits.push_back(t);
    guard_transit_w.push_back(w);
  }
  for (const auto& country : client_ases)
    for (const auto& as : country) {
      auto& ups = topo.edges[as.asn];
      const bool reaches =
          std::any_of(ups.begin(), ups.end(), [&](Asn t) { return guard_bw_by_transit.count(t) > 0; });
      if (!reaches) ups.push_back(guard_transits[topo_rng.weighted_index(guard_transit_w)]);
    }

  // Clients: country quotas by largest remainder, then round-robin over the
  // country's ASes, so every client AS holds (nearly) the same number of
  // clients under equal shares. The order is shuffled before ids are handed out.
  const auto n_clients = cfg.resolved_clients();
  double share_sum = 0.0;
  for (const auto& c : client_countries) share_sum += c.share;
  std::vector<std::int64_t> quota(client_countries.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  std::int64_t assigned = 0;
  for (std::size_t c = 0; c < client_countries.size(); ++c) {
    const double exact = static_cast<double>(n_clients) * client_countries[c].share / share_sum;
    quota[c] = static_cast<std::int64_t>(std::floor(exact));
    assigned += quota[c];
    remainder.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n_clients; ++k, ++assigned) ++quota[remainder[k % remainder.size()].second];
  std::vector<const StubAs*> slots;
  for (std::size_t c = 0; c < client_countries.size(); ++c)
    for (std::int64_t k = 0; k < quota[c]; ++k)
      slots.push_back(&client_ases[c][static_cast<std::size_t>(k) % client_ases[c].size()]);
  client_rng.shuffle(slots);
  std::vector<Endpoint> clients;
  for (std::int64_t i = 0; i < n_clients; ++i) {
    const auto& as = *slots[static_cast<std::size_t>(i)];
    Endpoint e;
    e.id = cfg.relays + i;
    e.kind = EndpointKind::client;
    e.asn = as.asn;
    e.country = as.country;
    const auto loc = sample_in(box_for(as.country), client_rng);
    e.lat = loc.lat;
    e.lon = loc.lon;
    clients.push_back(std::move(e));
  }

  std::vector<Endpoint> destinations;
  for (std::int64_t i = 0; i < cfg.destinations; ++i) {
    const auto& as = dest_ases[dest_rng.below(dest_ases.size())];
    Endpoint e;
    e.id = cfg.relays + n_clients + i;
    e.kind = EndpointKind::destination;
    e.asn = as.asn;
    e.country = as.country;
    const auto loc = sample_in(box_for(as.country), dest_rng);
    e.lat = loc.lat;
    e.lon = loc.lon;
    destinations.push_back(std::move(e));
  }

  return NetworkModel(std::move(relays), std::move(clients), std::move(destinations), std::move(topo),
                      cfg.fiber_factor, cfg.proc_delay_ms);
}

}  // namespace torsel::net
