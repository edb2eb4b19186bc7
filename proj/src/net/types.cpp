#include "torsel/net/types.hpp"

#include <string>

#include "torsel/common/error.hpp"

namespace torsel::net {

std::string_view to_string(EndpointKind k) noexcept {
  return k == EndpointKind::client ? "client" : "destination";
}

EndpointKind endpoint_kind_from(std::string_view s) {
  if (s == "client") return EndpointKind::client;
  if (s == "destination") return EndpointKind::destination;
  throw ValidationError("unknown endpoint kind '" + std::string(s) + "'");
}

bool valid_country(std::string_view cc) noexcept {
  return cc.size() == 2 && cc[0] >= 'A' && cc[0] <= 'Z' && cc[1] >= 'A' && cc[1] <= 'Z';
}

bool valid_coordinates(double lat, double lon) noexcept {
  return lat >= -90.0 && lat <= 90.0 && lon > -180.0 && lon <= 180.0;
}

void validate(const Relay& r) {
  const auto who = "relay " + std::to_string(r.id);
  if (r.bandwidth <= 0) throw ValidationError(who + ": bandwidth must be positive");
  if (!valid_country(r.country)) throw ValidationError(who + ": bad country code '" + r.country + "'");
  if (!valid_coordinates(r.lat, r.lon)) throw ValidationError(who + ": coordinates out of range");
  if (r.nickname.empty() || r.nickname.find(',') != std::string::npos)
    throw ValidationError(who + ": nickname must be non-empty and comma-free");
}

void validate(const Endpoint& e) {
  const auto who = std::string(to_string(e.kind)) + " " + std::to_string(e.id);
  if (!valid_country(e.country)) throw ValidationError(who + ": bad country code '" + e.country + "'");
  if (!valid_coordinates(e.lat, e.lon)) throw ValidationError(who + ": coordinates out of range");
}

}  // namespace torsel::net
