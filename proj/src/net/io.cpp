#include "torsel/net/io.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"

namespace torsel::net {

namespace {

constexpr const char* kRelayHeader = "id,nickname,bandwidth,asn,country,lat,lon,is_guard,is_exit";
constexpr const char* kEndpointHeader = "id,kind,asn,country,lat,lon";

// Line numbers are 1-based with the header on line 1; blank lines are
// skipped, so track them alongside the rows.
template <class Fn>
void for_each_row(std::istream& in, const char* header, std::size_t arity, Fn&& fn) {
  const auto lines = csv::read_lines(in);
  if (lines.empty() || lines[0] != header)
    throw ParseError(std::string("expected header '") + header + "'", 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != arity)
      throw ParseError("expected " + std::to_string(arity) + " fields, got " + std::to_string(f.size()),
                       i + 1);
    fn(f, i + 1);
  }
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

}  // namespace

void write_relays(std::ostream& out, const std::vector<Relay>& relays) {
  out << kRelayHeader << '\n';
  for (const auto& r : relays) {
    out << r.id << ',' << r.nickname << ',' << r.bandwidth << ',' << r.asn << ',' << r.country << ','
        << csv::fmt(r.lat) << ',' << csv::fmt(r.lon) << ',' << (r.is_guard ? 1 : 0) << ','
        << (r.is_exit ? 1 : 0) << '\n';
  }
}

std::vector<Relay> read_relays(std::istream& in) {
  std::vector<Relay> relays;
  std::set<RelayId> ids;
  for_each_row(in, kRelayHeader, 9, [&](const std::vector<std::string>& f, std::size_t line) {
    Relay r;
    r.id = csv::to_int(f[0], line);
    r.nickname = f[1];
    r.bandwidth = csv::to_int(f[2], line);
    r.asn = csv::to_int(f[3], line);
    r.country = f[4];
    r.lat = csv::to_double(f[5], line);
    r.lon = csv::to_double(f[6], line);
    r.is_guard = csv::to_bool(f[7], line);
    r.is_exit = csv::to_bool(f[8], line);
    try {
      validate(r);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " (line " + std::to_string(line) + ")");
    }
    if (!ids.insert(r.id).second)
      throw ValidationError("duplicate relay id " + std::to_string(r.id) + " (line " +
                            std::to_string(line) + ")");
    relays.push_back(std::move(r));
  });
  return relays;
}

void save_relay_table(const std::filesystem::path& path, const std::vector<Relay>& relays) {
  auto out = open_out(path);
  write_relays(out, relays);
}

std::vector<Relay> load_relay_table(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_relays(in);
}

void write_endpoints(std::ostream& out, const std::vector<Endpoint>& endpoints) {
  out << kEndpointHeader << '\n';
  for (const auto& e : endpoints) {
    out << e.id << ',' << to_string(e.kind) << ',' << e.asn << ',' << e.country << ','
        << csv::fmt(e.lat) << ',' << csv::fmt(e.lon) << '\n';
  }
}

std::vector<Endpoint> read_endpoints(std::istream& in) {
  std::vector<Endpoint> eps;
  std::set<EndpointId> ids;
  for_each_row(in, kEndpointHeader, 6, [&](const std::vector<std::string>& f, std::size_t line) {
    Endpoint e;
    e.id = csv::to_int(f[0], line);
    try {
      e.kind = endpoint_kind_from(f[1]);
    } catch (const ValidationError& ex) {
      throw ParseError(ex.what(), line);
    }
    e.asn = csv::to_int(f[2], line);
    e.country = f[3];
    e.lat = csv::to_double(f[4], line);
    e.lon = csv::to_double(f[5], line);
    try {
      validate(e);
    } catch (const ValidationError& ex) {
      throw ValidationError(std::string(ex.what()) + " (line " + std::to_string(line) + ")");
    }
    if (!ids.insert(e.id).second)
      throw ValidationError("duplicate endpoint id " + std::to_string(e.id) + " (line " +
                            std::to_string(line) + ")");
    eps.push_back(std::move(e));
  });
  return eps;
}

void write_topology(std::ostream& out, const AsTopology& topo) {
  nlohmann::ordered_json j;
  j["tier1"] = topo.tier1;
  nlohmann::ordered_json edges = nlohmann::ordered_json::object();
  for (const auto& [asn, ups] : topo.edges) edges[std::to_string(asn)] = ups;
  j["edges"] = std::move(edges);
  j["seed"] = topo.seed;
  out << j.dump(1) << '\n';
}

AsTopology read_topology(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("topology.json: ") + e.what(), 0);
  }
  AsTopology t;
  try {
    t.tier1 = j.at("tier1").get<std::vector<Asn>>();
    for (const auto& [key, ups] : j.at("edges").items()) {
      std::size_t used = 0;
      const Asn asn = std::stoll(key, &used);
      if (used != key.size()) throw ValidationError("topology.json: bad ASN key '" + key + "'");
      t.edges[asn] = ups.get<std::vector<Asn>>();
    }
    t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("topology.json: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ValidationError("topology.json: non-numeric ASN key");
  }
  t.validate();
  return t;
}

void save_network(const std::filesystem::path& dir, const NetworkModel& net) {
  std::filesystem::create_directories(dir);
  save_relay_table(dir / kRelaysFile, net.relays());
  std::vector<Endpoint> eps = net.clients();
  eps.insert(eps.end(), net.destinations().begin(), net.destinations().end());
  {
    auto out = open_out(dir / kEndpointsFile);
    write_endpoints(out, eps);
  }
  auto out = open_out(dir / kTopologyFile);
  write_topology(out, net.topology());
}

NetworkModel load_network(const std::filesystem::path& dir, double fiber_factor,
                          double proc_delay_ms) {
  auto relays = load_relay_table(dir / kRelaysFile);
  auto ep_in = open_in(dir / kEndpointsFile);
  auto eps = read_endpoints(ep_in);
  auto topo_in = open_in(dir / kTopologyFile);
  auto topo = read_topology(topo_in);
  std::vector<Endpoint> clients, dests;
  for (auto& e : eps) (e.kind == EndpointKind::client ? clients : dests).push_back(std::move(e));
  return NetworkModel(std::move(relays), std::move(clients), std::move(dests), std::move(topo),
                      fiber_factor, proc_delay_ms);
}

}  // namespace torsel::net
