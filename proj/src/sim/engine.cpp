#include "torsel/sim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/net/geo.hpp"

namespace torsel::sim {

void validate(const Circuit& c, const net::NetworkModel& net) {
  if (c.guard == c.middle || c.guard == c.exit || c.middle == c.exit)
    throw ValidationError("circuit relays must be distinct");
  if (!net.relay(c.guard).is_guard)
    throw ValidationError("relay " + std::to_string(c.guard) + " is not a guard");
  net.relay(c.middle);
  if (!net.relay(c.exit).is_exit)
    throw ValidationError("relay " + std::to_string(c.exit) + " is not an exit");
}

bool is_valid(const Circuit& c, const net::NetworkModel& net) noexcept {
  try {
    validate(c, net);
    return true;
  } catch (const Error&) {
    return false;
  }
}

void LatencyParams::validate() const {
  if (!(q0_s >= 0.0)) throw ConfigError("q0 must be >= 0");
  if (!(u_max > 0.0 && u_max < 1.0)) throw ConfigError("u_max must lie in (0, 1)");
  if (!(window_s > 0.0)) throw ConfigError("window must be > 0");
  if (!(probe_sigma >= 0.0)) throw ConfigError("probe sigma must be >= 0");
}

void Workload::validate() const {
  if (!(file_kib >= 0.0)) throw ConfigError("workload.file_kib must be >= 0");
  if (streams_per_epoch < 1) throw ConfigError("workload.streams_per_epoch must be >= 1");
  if (epochs < 1) throw ConfigError("workload.epochs must be >= 1");
}

LoadState fixed_point_load(const net::NetworkModel& net, std::span<const Assignment> assignments,
                           const LatencyParams& p) {
  const auto n = net.relays().size();
  LoadState s = LoadState::idle(n);
  std::vector<double> demand(n, 0.0);
  // Pass one: accumulate; pass two: normalise. Nothing depends on order.
  for (const auto& a : assignments) {
    for (auto id : {a.circuit.guard, a.circuit.middle, a.circuit.exit}) {
      const auto i = net.relay_index(id);
      ++s.streams[i];
      demand[i] += a.file_kib / p.window_s;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    s.utilization[i] = std::min(p.u_max, demand[i] / static_cast<double>(net.relays()[i].bandwidth));
  return s;
}

double circuit_rtt_s(const net::NetworkModel& net, EndpointId client, const Circuit& c,
                     EndpointId destination) {
  std::vector<net::GeoPoint> hops;
  hops.push_back(net.client(client).location());
  for (auto id : {c.guard, c.middle, c.exit}) hops.push_back(net.relay(id).location());
  if (destination >= 0) hops.push_back(net.destination(destination).location());
  double ms = 0.0;
  for (std::size_t i = 1; i < hops.size(); ++i)
    ms += net::geo_rtt_ms(hops[i - 1], hops[i], net.fiber_factor()) + net.proc_delay_ms();
  return ms / 1000.0;
}

double queueing_s(const net::NetworkModel& net, const Circuit& c, const LoadState& load,
                  const LatencyParams& p) {
  double q = 0.0;
  for (auto id : {c.guard, c.middle, c.exit}) {
    const double u = std::min(p.u_max, load.utilization[net.relay_index(id)]);
    q += p.q0_s * u / (1.0 - u);
  }
  return q;
}

double ttlb_oracle(const net::NetworkModel& net, EndpointId client, const Circuit& c,
                   EndpointId destination, double file_kib, const LoadState& load,
                   const LatencyParams& p) {
  double bottleneck = std::numeric_limits<double>::infinity();
  for (auto id : {c.guard, c.middle, c.exit}) {
    const auto i = net.relay_index(id);
    const double share = static_cast<double>(net.relays()[i].bandwidth) /
                         static_cast<double>(std::max<std::int64_t>(1, load.streams[i]));
    bottleneck = std::min(bottleneck, share);
  }
  return circuit_rtt_s(net, client, c, destination) + file_kib / bottleneck +
         queueing_s(net, c, load, p);
}

double probe_rtt(const net::NetworkModel& net, EndpointId client, const Circuit& c,
                 const LoadState& load, Rng& rng, const LatencyParams& p) {
  const double base = circuit_rtt_s(net, client, c) + queueing_s(net, c, load, p);
  if (p.probe_sigma == 0.0) return base;
  const double s = p.probe_sigma;
  return base * std::exp(s * rng.normal() - 0.5 * s * s);
}

std::vector<StreamRecord> run_epochs(const net::NetworkModel& net,
                                     std::span<const std::unique_ptr<CircuitPolicy>> policies,
                                     const Workload& workload, std::uint64_t seed,
                                     const LatencyParams& p, const DestinationSets& destinations) {
  workload.validate();
  p.validate();
  const auto& clients = net.clients();
  if (policies.size() != clients.size())
    throw SimulationError("need one policy per client (" + std::to_string(clients.size()) +
                          "), got " + std::to_string(policies.size()));
  if (!destinations.empty() && destinations.size() != clients.size())
    throw SimulationError("destination sets must be given for every client or none");
  if (net.destinations().empty()) throw SimulationError("network has no destinations");

  std::vector<EndpointId> all_dests;
  for (const auto& d : net.destinations()) all_dests.push_back(d.id);

  const auto streams = static_cast<std::size_t>(workload.streams_per_epoch);
  std::vector<StreamRecord> out;
  out.reserve(clients.size() * streams * static_cast<std::size_t>(workload.epochs));
  LoadState observed = LoadState::idle(net.relays().size());

  for (std::int64_t epoch = 0; epoch < workload.epochs; ++epoch) {
    const auto first = out.size();
    std::vector<Assignment> assignments;
    assignments.reserve(clients.size() * streams);
    for (std::size_t ci = 0; ci < clients.size(); ++ci) {
      const auto client = clients[ci].id;
      const auto u_client = static_cast<std::uint64_t>(client);
      const auto u_epoch = static_cast<std::uint64_t>(epoch);
      Rng rng(derive_seed({seed, 0x5e1ec7, u_epoch, u_client}));
      const ProbeFn probe = [&](const Circuit& c, Rng& r) {
        return probe_rtt(net, client, c, observed, r, p);
      };
      std::vector<Circuit> plan;
      try {
        plan = policies[ci]->plan_epoch(streams, rng, probe);
      } catch (const SelectionError& e) {
        throw SimulationError("client " + std::to_string(client) + ": " + e.what());
      }
      if (plan.size() != streams)
        throw SimulationError("client " + std::to_string(client) + ": policy returned " +
                              std::to_string(plan.size()) + " circuits for " +
                              std::to_string(streams) + " streams");
      // Destinations come from their own stream so every algorithm faces
      // the same requests.
      Rng dest_rng(derive_seed({seed, 0xde57, u_epoch, u_client}));
      const auto& pool = destinations.empty() || destinations[ci].empty() ? all_dests : destinations[ci];
      for (const auto& c : plan) {
        try {
          validate(c, net);
        } catch (const Error& e) {
          throw SimulationError("client " + std::to_string(client) + ": invalid circuit: " + e.what());
        }
        StreamRecord r;
        r.epoch = epoch;
        r.client = client;
        r.circuit = c;
        r.destination = pool[dest_rng.below(pool.size())];
        r.file_kib = std::llround(workload.file_kib);
        out.push_back(r);
        assignments.push_back({c, workload.file_kib});
      }
    }
    const LoadState load = fixed_point_load(net, assignments, p);
    for (auto i = first; i < out.size(); ++i) {
      auto& r = out[i];
      r.ttlb_s = ttlb_oracle(net, r.client, r.circuit, r.destination, workload.file_kib, load, p);
    }
    observed = load;
  }
  return out;
}

void write_records(std::ostream& out, std::span<const StreamRecord> records) {
  out << "epoch,client,guard,middle,exit,dest,file_kib,ttlb_s\n";
  for (const auto& r : records)
    out << r.epoch << ',' << r.client << ',' << r.circuit.guard << ',' << r.circuit.middle << ','
        << r.circuit.exit << ',' << r.destination << ',' << r.file_kib << ',' << csv::fmt(r.ttlb_s)
        << '\n';
}

std::vector<StreamRecord> read_records(std::istream& in) {
  const auto lines = csv::read_lines(in);
  if (lines.empty() || lines[0] != "epoch,client,guard,middle,exit,dest,file_kib,ttlb_s")
    throw ParseError("expected records header", 1);
  std::vector<StreamRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    const auto line = i + 1;
    if (f.size() != 8) throw ParseError("expected 8 fields", line);
    StreamRecord r;
    r.epoch = csv::to_int(f[0], line);
    r.client = csv::to_int(f[1], line);
    r.circuit = {csv::to_int(f[2], line), csv::to_int(f[3], line), csv::to_int(f[4], line)};
    r.destination = csv::to_int(f[5], line);
    r.file_kib = csv::to_int(f[6], line);
    r.ttlb_s = csv::to_double(f[7], line);
    if (!(r.ttlb_s > 0.0)) throw ValidationError("ttlb_s must be positive (line " + std::to_string(line) + ")");
    out.push_back(r);
  }
  return out;
}

RelayUsage relay_utilization(const net::NetworkModel& net, std::span<const StreamRecord> records) {
  if (records.empty()) throw ValidationError("relay utilisation needs at least one record");
  RelayUsage u;
  const auto n = net.relays().size();
  u.count.assign(n, 0);
  for (const auto& r : records)
    for (auto id : {r.circuit.guard, r.circuit.middle, r.circuit.exit}) ++u.count[net.relay_index(id)];
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    u.relay.push_back(net.relays()[i].id);
    u.circuit_share.push_back(static_cast<double>(u.count[i]) / static_cast<double>(records.size()));
    if (u.count[i] > 0) ++used;
  }
  u.fraction_used = static_cast<double>(used) / static_cast<double>(n);
  return u;
}

}  // namespace torsel::sim
