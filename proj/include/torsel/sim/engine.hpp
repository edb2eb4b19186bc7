#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "torsel/common/rng.hpp"
#include "torsel/sim/circuit.hpp"

namespace torsel::sim {

/// Congestion and measurement constants of the latency model.
struct LatencyParams {
  double q0_s = 0.050;        ///< queueing scale per relay
  double u_max = 0.95;        ///< utilisation clamp
  double window_s = 10.0;     ///< a stream's nominal rate is file_kib / window_s
  double probe_sigma = 0.1;   ///< lognormal probe noise

  void validate() const;
};

/// One stream's footprint for load accounting.
struct Assignment {
  Circuit circuit;
  double file_kib = 0.0;
};

/// Per-relay load, indexed like NetworkModel::relays().
struct LoadState {
  std::vector<std::int64_t> streams;
  std::vector<double> utilization;

  static LoadState idle(std::size_t relays) {
    return {std::vector<std::int64_t>(relays, 0), std::vector<double>(relays, 0.0)};
  }
};

/// Counts streams per relay, then sets u = min(u_max, demand / bandwidth).
LoadState fixed_point_load(const net::NetworkModel& net, std::span<const Assignment> assignments,
                           const LatencyParams& p = {});

/// Propagation plus per-hop processing, client -> guard -> middle -> exit
/// [-> destination], in seconds. Pass a negative destination to stop at the exit.
double circuit_rtt_s(const net::NetworkModel& net, EndpointId client, const Circuit& c,
                     EndpointId destination = -1);

/// Sum over the circuit's relays of q0 * u / (1 - u).
double queueing_s(const net::NetworkModel& net, const Circuit& c, const LoadState& load,
                  const LatencyParams& p = {});

/// Deterministic time to last byte. `load` must already include this stream.
double ttlb_oracle(const net::NetworkModel& net, EndpointId client, const Circuit& c,
                   EndpointId destination, double file_kib, const LoadState& load,
                   const LatencyParams& p = {});

/// Noisy RTT measurement of a built circuit (client to exit). The noise is
/// mean-one lognormal, so the expectation equals the sigma = 0 value.
double probe_rtt(const net::NetworkModel& net, EndpointId client, const Circuit& c,
                 const LoadState& load, Rng& rng, const LatencyParams& p = {});

/// Measurement hook handed to circuit policies. Probes see the load of the
/// most recently completed epoch.
using ProbeFn = std::function<double(const Circuit&, Rng&)>;

/// A client's circuit choices. One instance per client; the engine calls it
/// once per epoch and expects one circuit per stream.
class CircuitPolicy {
 public:
  virtual ~CircuitPolicy() = default;
  virtual std::vector<Circuit> plan_epoch(std::size_t streams, Rng& rng, const ProbeFn& probe) = 0;
};

struct Workload {
  double file_kib = 320.0;
  int streams_per_epoch = 2;
  int epochs = 30;

  void validate() const;
};

struct StreamRecord {
  std::int64_t epoch = 0;
  EndpointId client = 0;
  Circuit circuit;
  EndpointId destination = 0;
  std::int64_t file_kib = 0;
  double ttlb_s = 0.0;

  friend bool operator==(const StreamRecord&, const StreamRecord&) = default;
};

/// Per-client destination sets; an empty set means "all destinations".
using DestinationSets = std::vector<std::vector<EndpointId>>;

/// Runs the epoch loop. `policies[i]` drives net.clients()[i]. Records are
/// ordered by (epoch, client, stream).
std::vector<StreamRecord> run_epochs(const net::NetworkModel& net,
                                     std::span<const std::unique_ptr<CircuitPolicy>> policies,
                                     const Workload& workload, std::uint64_t seed,
                                     const LatencyParams& p = {},
                                     const DestinationSets& destinations = {});

// records.csv: epoch,client,guard,middle,exit,dest,file_kib,ttlb_s
void write_records(std::ostream& out, std::span<const StreamRecord> records);
std::vector<StreamRecord> read_records(std::istream& in);

struct RelayUsage {
  std::vector<net::RelayId> relay;   ///< every relay in the network, in table order
  std::vector<double> circuit_share; ///< fraction of circuits containing the relay
  std::vector<std::int64_t> count;
  double fraction_used = 0.0;        ///< relays on at least one circuit / all relays
  double fraction_avoided() const { return 1.0 - fraction_used; }
};

/// Shares sum to 3. Throws ValidationError on empty input.
RelayUsage relay_utilization(const net::NetworkModel& net, std::span<const StreamRecord> records);

}  // namespace torsel::sim
