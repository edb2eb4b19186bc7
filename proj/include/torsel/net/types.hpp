#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace torsel::net {

using RelayId = std::int64_t;
using EndpointId = std::int64_t;
using Asn = std::int64_t;

struct GeoPoint {
  double lat = 0.0;  ///< degrees, [-90, 90]
  double lon = 0.0;  ///< degrees, (-180, 180]

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct Relay {
  RelayId id = 0;
  std::string nickname;
  std::int64_t bandwidth = 0;  ///< consensus weight, KiB/s
  Asn asn = 0;
  std::string country;
  double lat = 0.0;
  double lon = 0.0;
  bool is_guard = false;
  bool is_exit = false;

  GeoPoint location() const noexcept { return {lat, lon}; }
  friend bool operator==(const Relay&, const Relay&) = default;
};

enum class EndpointKind { client, destination };

std::string_view to_string(EndpointKind k) noexcept;
EndpointKind endpoint_kind_from(std::string_view s);

struct Endpoint {
  EndpointId id = 0;
  EndpointKind kind = EndpointKind::client;
  Asn asn = 0;
  std::string country;
  double lat = 0.0;
  double lon = 0.0;

  GeoPoint location() const noexcept { return {lat, lon}; }
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

bool valid_country(std::string_view cc) noexcept;
bool valid_coordinates(double lat, double lon) noexcept;

/// Throws ValidationError describing the first violated invariant.
void validate(const Relay& r);
void validate(const Endpoint& e);

}  // namespace torsel::net
