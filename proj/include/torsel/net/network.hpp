#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "torsel/net/topology.hpp"
#include "torsel/net/types.hpp"

namespace torsel::net {

/// The synthetic Tor world. Immutable after construction and cheap to copy
/// (the path oracle is shared).
class NetworkModel {
 public:
  NetworkModel() = default;
  NetworkModel(std::vector<Relay> relays, std::vector<Endpoint> clients,
               std::vector<Endpoint> destinations, AsTopology topology,
               double fiber_factor = 0.67, double proc_delay_ms = 2.0);

  const std::vector<Relay>& relays() const noexcept { return relays_; }
  const std::vector<Endpoint>& clients() const noexcept { return clients_; }
  const std::vector<Endpoint>& destinations() const noexcept { return destinations_; }
  const AsTopology& topology() const noexcept { return paths_->topology(); }
  const AsPathOracle& paths() const noexcept { return *paths_; }
  double fiber_factor() const noexcept { return fiber_factor_; }
  double proc_delay_ms() const noexcept { return proc_delay_ms_; }

  const Relay& relay(RelayId id) const;
  std::size_t relay_index(RelayId id) const;
  bool has_relay(RelayId id) const noexcept { return relay_index_.count(id) > 0; }

  const Endpoint& client(EndpointId id) const;
  std::size_t client_index(EndpointId id) const;
  const Endpoint& destination(EndpointId id) const;
  std::size_t destination_index(EndpointId id) const;

  friend bool operator==(const NetworkModel& a, const NetworkModel& b);

 private:
  std::vector<Relay> relays_;
  std::vector<Endpoint> clients_;
  std::vector<Endpoint> destinations_;
  std::shared_ptr<const AsPathOracle> paths_ = std::make_shared<AsPathOracle>(AsTopology{});
  double fiber_factor_ = 0.67;
  double proc_delay_ms_ = 2.0;
  std::unordered_map<RelayId, std::size_t> relay_index_;
  std::unordered_map<EndpointId, std::size_t> client_index_;
  std::unordered_map<EndpointId, std::size_t> destination_index_;
};

struct CountryShare {
  std::string code;
  double share = 1.0;
};

struct GeneratorConfig {
  std::int64_t relays = 100;
  std::int64_t clients = 0;  ///< 0: derive from client_ratio
  double client_ratio = 2.5;
  std::int64_t destinations = 20;
  std::uint64_t seed = 1;

  double guard_fraction = 0.6;
  double exit_fraction = 0.5;

  double bw_pareto_shape = 1.5;
  double bw_pareto_scale = 1000.0;
  std::int64_t bw_min = 100;
  std::int64_t bw_max = 200000;

  /// Empty: the built-in ten client countries with equal shares.
  std::vector<CountryShare> client_countries;
  int client_ases_per_country = 2;
  int relay_ases = 30;
  int destination_ases = 12;
  int transit_ases = 10;

  double fiber_factor = 0.67;
  double proc_delay_ms = 2.0;

  std::int64_t resolved_clients() const;
  void validate() const;
};

/// The ten client countries used when GeneratorConfig::client_countries is empty.
const std::vector<std::string>& default_client_countries();

/// Synthetic world; a pure function of the configuration (seed included).
NetworkModel generate_network(const GeneratorConfig& cfg);

}  // namespace torsel::net
