#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "sthgcn/error.hpp"

namespace sthgcn::graph {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;

/// Great-circle distance in meters between two points given in degrees.
inline double haversine(double lat1, double lon1, double lat2, double lon2) {
  auto check = [](double lat, double lon) {
    if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0))
      throw InputError("haversine: coordinate (" + std::to_string(lat) + ", " +
                       std::to_string(lon) + ") out of range");
  };
  check(lat1, lon1);
  check(lat2, lon2);
  constexpr double rad = std::numbers::pi / 180.0;
  const double dphi = (lat2 - lat1) * rad;
  const double dlambda = (lon2 - lon1) * rad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double a = s1 * s1 + std::cos(lat1 * rad) * std::cos(lat2 * rad) * s2 * s2;
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(std::min(1.0, a)));
}

}  // namespace sthgcn::graph
