#pragma once

#include "torsel/net/network.hpp"
#include "torsel/sim/circuit.hpp"

namespace torsel::anon {

struct Geodesic {
  double km = 0.0;
  int iterations = 0;
  bool fallback = false;  ///< iteration did not converge; km is the spherical distance
};

inline constexpr double kVincentyTolerance = 1e-12;
inline constexpr int kVincentyMaxIterations = 200;

/// Inverse geodesic on the WGS-84 ellipsoid by Vincenty's iteration. Nearly
/// antipodal pairs, where the iteration can fail, fall back to the
/// mean-radius great circle and set `fallback`.
Geodesic vincenty(net::GeoPoint a, net::GeoPoint b);

inline double vincenty_km(net::GeoPoint a, net::GeoPoint b) { return vincenty(a, b).km; }

/// d(guard, middle) + d(middle, exit).
double circuit_length_km(const sim::Circuit& c, const net::NetworkModel& net);

}  // namespace torsel::anon
