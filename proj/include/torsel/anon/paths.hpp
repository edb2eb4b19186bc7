#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "torsel/common/rng.hpp"
#include "torsel/net/network.hpp"
#include "torsel/path/select.hpp"
#include "torsel/sim/circuit.hpp"

namespace torsel::anon {

using net::EndpointId;

/// A full stream path: client, three relays, destination.
struct ClasiPath {
  EndpointId client = 0;
  sim::Circuit circuit;
  EndpointId destination = 0;

  friend bool operator==(const ClasiPath&, const ClasiPath&) = default;
};

/// A path stamped with the epoch it was used in.
struct TimedPath {
  int epoch = 0;
  ClasiPath path;
};

enum class GuardMode {
  shared_pool,    ///< fresh weighted guard per path (g-select filter applied per client)
  sticky,         ///< one guard per client for the whole run
  pinned_per_as,  ///< every client AS owns one distinct guard: a fully identifying control world
};

struct PathSimConfig {
  path::AlgoSpec spec;
  int destinations_per_client = 5;  ///< user model: 5, 10, 15 or 20
  GuardMode guard_mode = GuardMode::shared_pool;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Generates sender-labelled paths over a fixed world. Each client draws
/// its destination set once (uniformly, without replacement); every stream
/// picks a destination uniformly from that set.
class PathSimulator {
 public:
  PathSimulator(const net::NetworkModel& net, PathSimConfig cfg, path::CircuitScorer scorer = {});

  const net::NetworkModel& network() const noexcept { return net_; }
  const PathSimConfig& config() const noexcept { return cfg_; }
  const sim::DestinationSets& destination_sets() const noexcept { return dest_sets_; }

  /// One path for the client at `client_index` (index into net.clients()).
  ClasiPath path_for(std::size_t client_index, Rng& rng) const;

  /// `n` paths, clients drawn uniformly. `stream` separates independent
  /// batches generated from the same simulator.
  std::vector<ClasiPath> generate(std::size_t n, std::uint64_t stream = 0) const;

  /// `epochs` x clients x `streams_per_epoch` paths ordered by epoch, then
  /// client. Intended for sticky-guard timelines.
  std::vector<TimedPath> timeline(int epochs, int streams_per_epoch) const;

 private:
  net::RelayId guard_for(std::size_t client_index, Rng& rng) const;

  const net::NetworkModel& net_;
  PathSimConfig cfg_;
  path::CircuitBuilder builder_;
  sim::DestinationSets dest_sets_;
  std::vector<net::RelayId> fixed_guard_;          // sticky and pinned modes
  std::vector<path::WeightTable> client_guards_;   // shared pool with g-select
  std::vector<net::RelayId> sb_guards_;            // shared pool under SB
};

/// Free-function form: `n` paths from `ps`. Throws ValidationError for n == 0.
std::vector<ClasiPath> generate_paths(const PathSimulator& ps, std::size_t n, std::uint64_t stream = 0);

// paths.csv: client,client_asn,guard,middle,exit,dest,dest_asn
void write_paths(std::ostream& out, std::span<const ClasiPath> paths, const net::NetworkModel& net);
std::vector<ClasiPath> read_paths(std::istream& in);

}  // namespace torsel::anon
