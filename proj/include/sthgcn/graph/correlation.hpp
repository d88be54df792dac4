#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "sthgcn/error.hpp"

namespace sthgcn::graph {

/// Pearson correlation with population moments.
///
/// Returns 0 when either series is constant (standard deviation below
/// 1e-12 relative to its magnitude). The result is clamped to [-1, 1].
inline double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pcc: series lengths differ");
  if (x.size() < 2) throw InputError("pcc: need at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double sx = std::sqrt(sxx / n);
  const double sy = std::sqrt(syy / n);
  if (sx <= 1e-12 * std::max(1.0, std::abs(mx)) || sy <= 1e-12 * std::max(1.0, std::abs(my)))
    return 0.0;
  return std::clamp((sxy / n) / (sx * sy), -1.0, 1.0);
}

}  // namespace sthgcn::graph
