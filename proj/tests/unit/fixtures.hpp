#pragma once

#include <string>
#include <vector>

#include "torsel/net/network.hpp"

namespace fx {

using namespace torsel;

inline const std::vector<net::Asn> kTier1 = {3356, 1299, 64601, 64602, 64603, 64604, 64605, 64606};

/// Tier-1 list plus the given stub -> uplinks edges.
inline net::AsTopology topology(std::map<net::Asn, std::vector<net::Asn>> edges) {
  net::AsTopology t;
  t.tier1 = kTier1;
  t.edges = std::move(edges);
  return t;
}

inline net::Relay relay(net::RelayId id, std::int64_t bw, net::Asn asn, bool guard, bool exit, double lat = 0.0,
                        double lon = 0.0, std::string cc = "DE") {
  net::Relay r;
  r.id = id;
  r.nickname = "r" + std::to_string(id);
  r.bandwidth = bw;
  r.asn = asn;
  r.country = std::move(cc);
  r.lat = lat;
  r.lon = lon;
  r.is_guard = guard;
  r.is_exit = exit;
  return r;
}

inline net::Endpoint endpoint(net::EndpointId id, net::EndpointKind kind, net::Asn asn, double lat = 0.0,
                              double lon = 0.0, std::string cc = "US") {
  net::Endpoint e;
  e.id = id;
  e.kind = kind;
  e.asn = asn;
  e.country = std::move(cc);
  e.lat = lat;
  e.lon = lon;
  return e;
}

/// Relays 0..n-1 in AS 65001, clients and destinations in 65002/65003, all
/// at the origin. Relay i has bandwidth bws[i]; flags as given.
inline net::NetworkModel flat_world(const std::vector<std::int64_t>& bws, const std::vector<bool>& guard,
                                    const std::vector<bool>& exit, int clients = 1, int dests = 1) {
  std::vector<net::Relay> rs;
  for (std::size_t i = 0; i < bws.size(); ++i)
    rs.push_back(relay(static_cast<net::RelayId>(i), bws[i], 65001, guard[i], exit[i]));
  std::vector<net::Endpoint> cs, ds;
  const auto base = static_cast<net::EndpointId>(bws.size());
  for (int i = 0; i < clients; ++i) cs.push_back(endpoint(base + i, net::EndpointKind::client, 65002));
  for (int i = 0; i < dests; ++i) ds.push_back(endpoint(base + clients + i, net::EndpointKind::destination, 65003));
  return net::NetworkModel(rs, cs, ds, topology({{65001, {3356}}, {65002, {3356}}, {65003, {1299}}}));
}

inline net::GeneratorConfig desk(std::uint64_t seed = 42) {
  net::GeneratorConfig g;
  g.relays = 100;
  g.clients = 250;
  g.destinations = 20;
  g.seed = seed;
  return g;
}

}  // namespace fx
