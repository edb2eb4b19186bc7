#include "torsel/anon/paths.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/sim/engine.hpp"

namespace torsel::anon {

void PathSimConfig::validate() const {
  spec.validate();
  if (destinations_per_client < 1) throw ConfigError("destinations per client must be >= 1");
}

PathSimulator::PathSimulator(const net::NetworkModel& net, PathSimConfig cfg, path::CircuitScorer scorer)
    : net_(net), cfg_(std::move(cfg)), builder_(net, cfg_.spec, std::move(scorer)) {
  cfg_.validate();
  const auto& clients = net.clients();
  const auto& dests = net.destinations();
  if (clients.empty()) throw ValidationError("path simulator needs at least one client");
  if (static_cast<std::size_t>(cfg_.destinations_per_client) > dests.size())
    throw ValidationError("user model asks for " + std::to_string(cfg_.destinations_per_client) +
                          " destinations per client but the world has " + std::to_string(dests.size()));

  for (const auto& c : clients) {
    Rng rng(derive_seed({cfg_.seed, 0xde5e7, static_cast<std::uint64_t>(c.id)}));
    std::vector<EndpointId> pool;
    for (const auto& d : dests) pool.push_back(d.id);
    // Partial Fisher-Yates: the first k entries are a uniform k-subset.
    const auto k = static_cast<std::size_t>(cfg_.destinations_per_client);
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(k);
    dest_sets_.push_back(std::move(pool));
  }

  const auto& consensus = builder_.consensus();
  const auto& spec = cfg_.spec;
  switch (cfg_.guard_mode) {
    case GuardMode::sticky:
      for (const auto& c : clients) fixed_guard_.push_back(path::sticky_guard(consensus, spec, c.id, cfg_.seed));
      break;
    case GuardMode::pinned_per_as: {
      std::set<net::Asn> ases;
      for (const auto& c : clients) ases.insert(c.asn);
      // Distinct bandwidths keep the guards distinguishable by their features.
      std::vector<net::RelayId> pinned;
      std::set<std::int64_t> seen_bw;
      for (auto id : path::by_bandwidth_desc(net, [](const net::Relay& r) { return r.is_guard; }))
        if (seen_bw.insert(net.relay(id).bandwidth).second) pinned.push_back(id);
      if (pinned.size() < ases.size())
        throw SelectionError("pinned guards need " + std::to_string(ases.size()) +
                             " guards with distinct bandwidths, found " + std::to_string(pinned.size()));
      for (const auto& c : clients)
        fixed_guard_.push_back(pinned[static_cast<std::size_t>(std::distance(ases.begin(), ases.find(c.asn)))]);
      break;
    }
    case GuardMode::shared_pool:
      if (spec.algo == path::Algo::denasa && spec.avoid_count > 0)
        for (const auto& c : clients)
          client_guards_.push_back(
              path::restrict_to(consensus.guard, path::denasa_g_select(net, consensus.guard, c.id, spec.avoid_count)));
      if (spec.algo == path::Algo::sb)
        sb_guards_ = path::by_bandwidth_desc(net, [](const net::Relay& r) { return r.is_guard; });
      break;
  }
}

net::RelayId PathSimulator::guard_for(std::size_t ci, Rng& rng) const {
  if (!fixed_guard_.empty()) return fixed_guard_[ci];
  if (!client_guards_.empty()) return client_guards_[ci].draw(rng);
  if (!sb_guards_.empty()) return path::sb_select(sb_guards_, cfg_.spec.sb_s, rng);
  return path::guard_assignment(builder_.consensus().guard, rng);
}

ClasiPath PathSimulator::path_for(std::size_t ci, Rng& rng) const {
  const auto& client = net_.clients().at(ci);
  const auto& dests = dest_sets_[ci];
  ClasiPath p;
  p.client = client.id;
  p.destination = dests[rng.below(dests.size())];
  const auto guard = guard_for(ci, rng);
  if (builder_.uses_car()) {
    // No traffic in the path generator: candidates are probed on an idle network.
    const auto idle = sim::LoadState::idle(net_.relays().size());
    const sim::ProbeFn probe = [&](const sim::Circuit& c, Rng& r) {
      return sim::probe_rtt(net_, client.id, c, idle, r);
    };
    p.circuit = builder_.build(guard, dests, rng, probe);
  } else {
    p.circuit = builder_.propose(guard, dests, rng);
  }
  return p;
}

std::vector<ClasiPath> PathSimulator::generate(std::size_t n, std::uint64_t stream) const {
  Rng rng(derive_seed({cfg_.seed, 0x9a7d, stream}));
  std::vector<ClasiPath> out;
  out.reserve(n);
  const auto n_clients = net_.clients().size();
  for (std::size_t i = 0; i < n; ++i) out.push_back(path_for(rng.below(n_clients), rng));
  return out;
}

std::vector<TimedPath> PathSimulator::timeline(int epochs, int streams_per_epoch) const {
  if (epochs < 1 || streams_per_epoch < 1) throw ValidationError("timeline needs epochs and streams >= 1");
  std::vector<TimedPath> out;
  for (int e = 0; e < epochs; ++e)
    for (std::size_t ci = 0; ci < net_.clients().size(); ++ci) {
      Rng rng(derive_seed({cfg_.seed, 0x71e, static_cast<std::uint64_t>(e), ci}));
      for (int s = 0; s < streams_per_epoch; ++s) out.push_back({e, path_for(ci, rng)});
    }
  return out;
}

std::vector<ClasiPath> generate_paths(const PathSimulator& ps, std::size_t n, std::uint64_t stream) {
  if (n == 0) throw ValidationError("generate_paths needs n > 0");
  return ps.generate(n, stream);
}

namespace {
constexpr const char* kPathsHeader = "client,client_asn,guard,middle,exit,dest,dest_asn";
}

void write_paths(std::ostream& out, std::span<const ClasiPath> paths, const net::NetworkModel& net) {
  out << kPathsHeader << '\n';
  for (const auto& p : paths)
    out << p.client << ',' << net.client(p.client).asn << ',' << p.circuit.guard << ',' << p.circuit.middle << ','
        << p.circuit.exit << ',' << p.destination << ',' << net.destination(p.destination).asn << '\n';
}

std::vector<ClasiPath> read_paths(std::istream& in) {
  const auto lines = csv::read_lines(in);
  if (lines.empty() || lines[0] != kPathsHeader) throw ParseError("expected header '" + std::string(kPathsHeader) + "'", 1);
  std::vector<ClasiPath> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 7) throw ParseError("expected 7 fields", i + 1);
    ClasiPath p;
    p.client = csv::to_int(f[0], i + 1);
    p.circuit.guard = csv::to_int(f[2], i + 1);
    p.circuit.middle = csv::to_int(f[3], i + 1);
    p.circuit.exit = csv::to_int(f[4], i + 1);
    p.destination = csv::to_int(f[5], i + 1);
    out.push_back(p);
  }
  return out;
}

}  // namespace torsel::anon
