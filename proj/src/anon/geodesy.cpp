#include "torsel/anon/geodesy.hpp"

#include <cmath>
#include <numbers>
#include <tuple>
#include <utility>

#include "torsel/net/geo.hpp"

namespace torsel::anon {

namespace {
constexpr double kA = 6378137.0;
constexpr double kF = 1.0 / 298.257223563;
constexpr double kB = (1.0 - kF) * kA;
constexpr double kRad = std::numbers::pi / 180.0;
}  // namespace

Geodesic vincenty(net::GeoPoint p, net::GeoPoint q) {
  Geodesic g;
  if (p == q) return g;
  // Canonical argument order makes the result exactly symmetric.
  if (std::tie(q.lat, q.lon) < std::tie(p.lat, p.lon)) std::swap(p, q);

  // Longitude difference wrapped into [-180, 180].
  const double L = std::remainder(q.lon - p.lon, 360.0) * kRad;
  const double u1 = std::atan((1.0 - kF) * std::tan(p.lat * kRad));
  const double u2 = std::atan((1.0 - kF) * std::tan(q.lat * kRad));
  const double sin_u1 = std::sin(u1), cos_u1 = std::cos(u1);
  const double sin_u2 = std::sin(u2), cos_u2 = std::cos(u2);

  double lambda = L;
  double sin_sigma = 0, cos_sigma = 0, sigma = 0, cos2_alpha = 0, cos_2sm = 0;
  bool converged = false;
  for (int i = 0; i < kVincentyMaxIterations; ++i) {
    g.iterations = i + 1;
    const double sin_l = std::sin(lambda), cos_l = std::cos(lambda);
    const double t1 = cos_u2 * sin_l;
    const double t2 = cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_l;
    sin_sigma = std::sqrt(t1 * t1 + t2 * t2);
    if (sin_sigma == 0.0) return g;  // coincident after rounding
    cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_l;
    sigma = std::atan2(sin_sigma, cos_sigma);
    const double sin_alpha = cos_u1 * cos_u2 * sin_l / sin_sigma;
    cos2_alpha = 1.0 - sin_alpha * sin_alpha;
    // Equatorial lines have cos2_alpha == 0 and cos_2sm is irrelevant.
    cos_2sm = cos2_alpha != 0.0 ? cos_sigma - 2.0 * sin_u1 * sin_u2 / cos2_alpha : 0.0;
    const double C = kF / 16.0 * cos2_alpha * (4.0 + kF * (4.0 - 3.0 * cos2_alpha));
    const double prev = lambda;
    lambda = L + (1.0 - C) * kF * sin_alpha *
                     (sigma + C * sin_sigma * (cos_2sm + C * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)));
    if (std::abs(lambda - prev) <= kVincentyTolerance) {
      converged = true;
      break;
    }
  }
  if (!converged || std::abs(lambda) > std::numbers::pi) {
    g.km = net::great_circle_km(p, q);
    g.fallback = true;
    return g;
  }
  const double u_sq = cos2_alpha * (kA * kA - kB * kB) / (kB * kB);
  const double A = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
  const double B = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
  const double delta_sigma =
      B * sin_sigma *
      (cos_2sm + B / 4.0 *
                     (cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm) -
                      B / 6.0 * cos_2sm * (-3.0 + 4.0 * sin_sigma * sin_sigma) * (-3.0 + 4.0 * cos_2sm * cos_2sm)));
  g.km = kB * A * (sigma - delta_sigma) / 1000.0;
  return g;
}

double circuit_length_km(const sim::Circuit& c, const net::NetworkModel& net) {
  const auto g = net.relay(c.guard).location();
  const auto m = net.relay(c.middle).location();
  const auto e = net.relay(c.exit).location();
  return vincenty_km(g, m) + vincenty_km(m, e);
}

}  // namespace torsel::anon
