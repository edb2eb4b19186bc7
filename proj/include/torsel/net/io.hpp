#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "torsel/net/network.hpp"

namespace torsel::net {

// relays.csv: id,nickname,bandwidth,asn,country,lat,lon,is_guard,is_exit
void write_relays(std::ostream& out, const std::vector<Relay>& relays);
std::vector<Relay> read_relays(std::istream& in);
void save_relay_table(const std::filesystem::path& path, const std::vector<Relay>& relays);
std::vector<Relay> load_relay_table(const std::filesystem::path& path);

// endpoints.csv: id,kind,asn,country,lat,lon  (clients and destinations mixed)
void write_endpoints(std::ostream& out, const std::vector<Endpoint>& endpoints);
std::vector<Endpoint> read_endpoints(std::istream& in);

// topology.json: {"tier1":[...],"edges":{"asn":[...]},"seed":N}
void write_topology(std::ostream& out, const AsTopology& topo);
AsTopology read_topology(std::istream& in);

inline constexpr const char* kRelaysFile = "relays.csv";
inline constexpr const char* kEndpointsFile = "endpoints.csv";
inline constexpr const char* kTopologyFile = "topology.json";

/// Writes the three world files into `dir` (created if missing).
void save_network(const std::filesystem::path& dir, const NetworkModel& net);

/// Loads the three world files. The latency parameters are not part of the
/// on-disk format and come from the caller.
NetworkModel load_network(const std::filesystem::path& dir, double fiber_factor = 0.67,
                          double proc_delay_ms = 2.0);

}  // namespace torsel::net
