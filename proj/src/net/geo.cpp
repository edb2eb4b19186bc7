#include "torsel/net/geo.hpp"

#include <cmath>
#include <numbers>
#include <tuple>
#include <utility>

namespace torsel::net {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

double great_circle_km(GeoPoint a, GeoPoint b) noexcept {
  if (a == b) return 0.0;
  // Fixed argument order keeps d(a, b) and d(b, a) bit-identical.
  if (std::tie(b.lat, b.lon) < std::tie(a.lat, a.lon)) std::swap(a, b);
  const double p1 = a.lat * kDeg;
  const double p2 = b.lat * kDeg;
  const double dl = (b.lon - a.lon) * kDeg;
  const double y = std::hypot(std::cos(p2) * std::sin(dl),
                              std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl));
  const double x = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  return kEarthMeanRadiusKm * std::atan2(y, x);
}

double geo_rtt_ms(GeoPoint a, GeoPoint b, double fiber_factor) noexcept {
  return 2.0 * great_circle_km(a, b) / (kSpeedOfLightKmPerS * fiber_factor) * 1000.0;
}

}  // namespace torsel::net
