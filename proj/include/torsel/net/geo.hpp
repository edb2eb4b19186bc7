#pragma once

#include "torsel/net/types.hpp"

namespace torsel::net {

inline constexpr double kEarthMeanRadiusKm = 6371.0088;
inline constexpr double kSpeedOfLightKmPerS = 299792.458;

/// Great-circle distance on the mean-radius sphere (Vincenty's special case
/// of the spherical formula, well conditioned at all separations).
double great_circle_km(GeoPoint a, GeoPoint b) noexcept;

/// Round-trip propagation delay over fibre: 2 d / (c * fiber_factor), in ms.
double geo_rtt_ms(GeoPoint a, GeoPoint b, double fiber_factor) noexcept;

}  // namespace torsel::net
