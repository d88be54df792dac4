#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sthgcn/error.hpp"

namespace sthgcn::data {

/// Layout of one model input: weekly, daily and recent segments of
/// `segment_length` points each.
struct SliceConfig {
  std::size_t segment_length = 12;  // l
  std::size_t recent = 1;           // T_r
  std::size_t daily = 2;            // T_d
  std::size_t weekly = 1;           // T_w
  std::size_t points_per_day = 96;  // T_o
  std::size_t horizon = 1;          // k

  /// T = (T_r + T_d + T_w) * l
  std::size_t steps() const { return (recent + daily + weekly) * segment_length; }

  /// Distance back from the anchor of every input column, oldest first.
  /// Periodic segments are centered on the same time of the earlier day or
  /// week: they start floor(l/2) - 1 points before it.
  std::vector<std::size_t> lags() const {
    validate();
    const std::size_t l = segment_length;
    const std::size_t half = l / 2;
    std::vector<std::size_t> out;
    out.reserve(steps());
    auto periodic = [&](std::size_t period, std::size_t count) {
      for (std::size_t j = count; j >= 1; --j) {
        const std::size_t first = period * j + half - 1;  // lag of the segment's first point
        for (std::size_t s = 0; s < l; ++s) out.push_back(first - s);
      }
    };
    periodic(7 * points_per_day, weekly);
    periodic(points_per_day, daily);
    for (std::size_t s = 0; s < l * recent; ++s) out.push_back(l * recent - 1 - s);
    return out;
  }

  /// Smallest anchor whose input window starts at index >= 0.
  std::size_t min_anchor() const { return lags().front(); }

  void validate() const {
    if (segment_length < 1) throw ConfigError("slice: segment_length must be >= 1");
    if (recent < 1) throw ConfigError("slice: recent segment count must be >= 1");
    if (horizon < 1) throw ConfigError("slice: horizon must be >= 1");
    if (points_per_day < 1) throw ConfigError("slice: points_per_day must be >= 1");
    const std::size_t l = segment_length;
    const std::size_t half = l / 2;
    // Lags must be strictly decreasing: segments may neither overlap nor
    // reach past the anchor.
    std::size_t prev_first = 0;
    bool have_prev = false;
    auto check_segment = [&](std::size_t period, std::size_t j) {
      if (period * j + half < l)
        throw ConfigError(
            "slice: periodic segment reaches past the anchor (points_per_day too small for "
            "segment_length)");
      const std::size_t first = period * j + half - 1;
      if (have_prev && first >= prev_first - (l - 1))
        throw ConfigError("slice: input segments overlap");
      prev_first = first;
      have_prev = true;
    };
    for (std::size_t w = weekly; w >= 1; --w) check_segment(7 * points_per_day, w);
    for (std::size_t j = daily; j >= 1; --j) check_segment(points_per_day, j);
    if (have_prev && l * recent - 1 >= prev_first - (l - 1))
      throw ConfigError("slice: recent component overlaps the periodic segments");
  }
};

/// Source indices of the input window at anchor `t`, strictly increasing,
/// ordered weekly, daily, recent.
inline std::vector<std::size_t> slice_indices(std::size_t t, const SliceConfig& cfg) {
  const std::vector<std::size_t> lags = cfg.lags();
  if (lags.front() > t)
    throw OutOfRangeError("slice: anchor " + std::to_string(t) + " needs history back to index " +
                          std::to_string(static_cast<long long>(t) -
                                         static_cast<long long>(lags.front())) +
                          "; earliest valid anchor is " + std::to_string(lags.front()));
  std::vector<std::size_t> idx(lags.size());
  for (std::size_t s = 0; s < lags.size(); ++s) idx[s] = t - lags[s];
  return idx;
}

}  // namespace sthgcn::data
