#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sthgcn/data/series.hpp"
#include "sthgcn/error.hpp"

namespace sthgcn::data {

enum class ScalerMode { global, per_node };

/// Z-score normalization fitted on a training range.
///
/// Global mode keeps one mean/std for all stations; per-node mode keeps one
/// pair per station. Standard deviations use the population (1/n) form and
/// a (near) zero deviation is replaced by 1.
class ZScoreScaler {
 public:
  ZScoreScaler() = default;
  ZScoreScaler(ScalerMode mode, std::vector<double> mean, std::vector<double> stddev)
      : mode_(mode), mean_(std::move(mean)), std_(std::move(stddev)) {
    if (mean_.empty() || mean_.size() != std_.size())
      throw InputError("scaler: mean/std size mismatch");
    for (double s : std_)
      if (!(s > 0.0)) throw InputError("scaler: std must be positive");
  }

  static constexpr double kStdFloor = 1e-12;

  /// Fits on columns [begin, end) of `series`; missing cells are skipped.
  static ZScoreScaler fit(const TrafficSeries& series, std::size_t begin, std::size_t end,
                          ScalerMode mode = ScalerMode::global) {
    if (begin >= end || end > series.length())
      throw InputError("scaler: empty training slice");
    const std::size_t groups = mode == ScalerMode::global ? 1 : series.stations();
    std::vector<double> sum(groups, 0.0), count(groups, 0.0);
    for (std::size_t i = 0; i < series.stations(); ++i) {
      const std::size_t g = mode == ScalerMode::global ? 0 : i;
      for (std::size_t t = begin; t < end; ++t) {
        const double v = series(i, t);
        if (is_missing(v)) continue;
        sum[g] += v;
        count[g] += 1.0;
      }
    }
    std::vector<double> mean(groups), sq(groups, 0.0);
    for (std::size_t g = 0; g < groups; ++g) {
      if (count[g] == 0.0) throw InputError("scaler: training slice has no observed values");
      mean[g] = sum[g] / count[g];
    }
    for (std::size_t i = 0; i < series.stations(); ++i) {
      const std::size_t g = mode == ScalerMode::global ? 0 : i;
      for (std::size_t t = begin; t < end; ++t) {
        const double v = series(i, t);
        if (is_missing(v)) continue;
        sq[g] += (v - mean[g]) * (v - mean[g]);
      }
    }
    std::vector<double> sd(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      sd[g] = std::sqrt(sq[g] / count[g]);
      if (sd[g] < kStdFloor) sd[g] = 1.0;
    }
    return ZScoreScaler(mode, std::move(mean), std::move(sd));
  }

  ScalerMode mode() const noexcept { return mode_; }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& stddev() const noexcept { return std_; }

  double apply(double x, std::size_t station = 0) const {
    const std::size_t g = group(station);
    return (x - mean_[g]) / std_[g];
  }

  double invert(double z, std::size_t station = 0) const {
    const std::size_t g = group(station);
    return z * std_[g] + mean_[g];
  }

  TrafficSeries apply(const TrafficSeries& series) const {
    check_stations(series);
    TrafficSeries out = series;
    for (std::size_t i = 0; i < series.stations(); ++i)
      for (std::size_t t = 0; t < series.length(); ++t) out(i, t) = apply(series(i, t), i);
    return out;
  }

  TrafficSeries invert(const TrafficSeries& series) const {
    check_stations(series);
    TrafficSeries out = series;
    for (std::size_t i = 0; i < series.stations(); ++i)
      for (std::size_t t = 0; t < series.length(); ++t) out(i, t) = invert(series(i, t), i);
    return out;
  }

 private:
  std::size_t group(std::size_t station) const {
    if (mode_ == ScalerMode::global) return 0;
    if (station >= mean_.size()) throw InputError("scaler: station index out of range");
    return station;
  }

  void check_stations(const TrafficSeries& s) const {
    if (mode_ == ScalerMode::per_node && s.stations() != mean_.size())
      throw DimensionError("scaler: fitted on " + std::to_string(mean_.size()) +
                           " stations, applied to " + std::to_string(s.stations()));
  }

  ScalerMode mode_ = ScalerMode::global;
  std::vector<double> mean_{0.0};
  std::vector<double> std_{1.0};
};

}  // namespace sthgcn::data
