#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"

namespace sthgcn::data {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Traffic volumes of N stations on a regular time grid.
///
/// values(i, t) is the volume of station i at timestamp(t); missing cells
/// hold NaN until imputed.
class TrafficSeries {
 public:
  TrafficSeries() = default;

  TrafficSeries(std::vector<std::string> station_ids, Minutes start, int granularity_minutes,
                ad::Tensor values)
      : station_ids_(std::move(station_ids)),
        start_(start),
        granularity_(granularity_minutes),
        values_(std::move(values)) {
    if (granularity_ <= 0) throw InputError("series: granularity must be positive");
    if (kMinutesPerDay % granularity_ != 0)
      throw InputError("series: granularity " + std::to_string(granularity_) +
                       " min does not divide a day");
    if (values_.rank() != 2 || values_.rows() != station_ids_.size())
      throw DimensionError("series: values must be stations x time");
  }

  std::size_t stations() const noexcept { return station_ids_.size(); }
  std::size_t length() const { return values_.cols(); }
  int granularity() const noexcept { return granularity_; }
  /// Points per day.
  std::size_t points_per_day() const {
    return static_cast<std::size_t>(kMinutesPerDay / granularity_);
  }

  Minutes start() const noexcept { return start_; }
  Minutes timestamp(std::size_t t) const {
    return start_ + static_cast<Minutes>(t) * granularity_;
  }

  /// Grid index of `ts`, or npos when it is off-grid or out of range.
  std::size_t index_of(Minutes ts) const {
    const Minutes off = ts - start_;
    if (off < 0 || off % granularity_ != 0) return npos;
    const auto idx = static_cast<std::size_t>(off / granularity_);
    return idx < length() ? idx : npos;
  }

  /// First grid index whose timestamp is >= ts (length() if none).
  std::size_t lower_index(Minutes ts) const {
    if (ts <= start_) return 0;
    const Minutes off = ts - start_;
    const auto idx = static_cast<std::size_t>((off + granularity_ - 1) / granularity_);
    return std::min(idx, length());
  }

  const std::vector<std::string>& station_ids() const noexcept { return station_ids_; }
  const ad::Tensor& values() const noexcept { return values_; }
  ad::Tensor& values() noexcept { return values_; }

  double operator()(std::size_t station, std::size_t t) const { return values_(station, t); }
  double& operator()(std::size_t station, std::size_t t) { return values_(station, t); }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (double v : values_.values()) n += is_missing(v) ? 1 : 0;
    return n;
  }

  /// Columns [begin, end) as a new series.
  TrafficSeries slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > length())
      throw InputError("series: slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                       ") out of range");
    ad::Tensor v({stations(), end - begin});
    for (std::size_t i = 0; i < stations(); ++i)
      for (std::size_t t = begin; t < end; ++t) v(i, t - begin) = values_(i, t);
    return TrafficSeries(station_ids_, timestamp(begin), granularity_, std::move(v));
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> station_ids_;
  Minutes start_ = 0;
  int granularity_ = 15;
  ad::Tensor values_;
};

/// Fills every missing cell with the mean of the station's observed values
/// at the same time of day on earlier days. Without such values the
/// station's mean over earlier observations is used, and 0 when the station
/// has no earlier observation at all. Observed cells are left untouched.
inline TrafficSeries impute_missing(const TrafficSeries& raw) {
  TrafficSeries out = raw;
  const std::size_t n = raw.stations();
  const std::size_t len = raw.length();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> slot_sum(kMinutesPerDay, 0.0);
    std::vector<std::size_t> slot_count(kMinutesPerDay, 0);
    double run_sum = 0.0;
    std::size_t run_count = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const auto slot = static_cast<std::size_t>(minute_of_day(raw.timestamp(t)));
      const double v = raw(i, t);
      if (is_missing(v)) {
        if (slot_count[slot] > 0)
          out(i, t) = slot_sum[slot] / static_cast<double>(slot_count[slot]);
        else if (run_count > 0)
          out(i, t) = run_sum / static_cast<double>(run_count);
        else
          out(i, t) = 0.0;
      } else {
        slot_sum[slot] += v;
        ++slot_count[slot];
        run_sum += v;
        ++run_count;
      }
    }
  }
  return out;
}

/// Geographic position of a station, decimal degrees (WGS84).
struct Station {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
};

}  // namespace sthgcn::data
