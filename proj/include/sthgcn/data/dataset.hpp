#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/scaler.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/data/slicing.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"

namespace sthgcn::data {

/// Set of holiday dates; an empty calendar has no holidays.
class HolidayCalendar {
 public:
  HolidayCalendar() = default;
  explicit HolidayCalendar(std::set<Minutes> days) : days_(std::move(days)) {}

  void add(Minutes date) { days_.insert(day_of(date)); }
  bool is_holiday(Minutes ts) const { return days_.count(day_of(ts)) != 0; }
  const std::set<Minutes>& days() const noexcept { return days_; }

 private:
  std::set<Minutes> days_;  // day numbers since epoch
};

/// Number of external features per node: is-weekend, is-holiday.
inline constexpr std::size_t kCalendarFeatures = 2;

/// One training instance, by reference into a Dataset's series.
struct Sample {
  std::size_t anchor = 0;
  std::size_t target = 0;  // anchor + horizon

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Half-open range [begin, end) of target indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
};

struct Splits {
  IndexRange train;
  IndexRange validation;
  IndexRange test;
};

/// Contiguous target ranges: train up to and including `train_last_day`,
/// validation up to and including `val_last_day`, test the rest. Inputs of
/// later splits may reach back into earlier ones; targets never cross.
inline Splits split_by_date(const TrafficSeries& series, Minutes train_last_day,
                            Minutes val_last_day) {
  if (!(train_last_day < val_last_day))
    throw ConfigError("split: train_end must precede val_end");
  const std::size_t a = series.lower_index(day_of(train_last_day) * kMinutesPerDay + kMinutesPerDay);
  const std::size_t b = series.lower_index(day_of(val_last_day) * kMinutesPerDay + kMinutesPerDay);
  const std::size_t len = series.length();
  if (a == 0) throw ConfigError("split: train_end precedes the series start");
  if (b >= len) throw ConfigError("split: val_end must precede the end of the series");
  if (a >= b) throw ConfigError("split: validation range is empty");
  return {{0, a}, {a, b}, {b, len}};
}

/// Split by fractions of the grid (train, validation; test gets the rest).
inline Splits split_by_fraction(std::size_t length, double train, double validation) {
  if (!(train > 0.0) || !(validation > 0.0) || train + validation >= 1.0)
    throw ConfigError("split: fractions must be positive and sum below 1");
  const auto a = static_cast<std::size_t>(std::llround(train * static_cast<double>(length)));
  const auto b =
      static_cast<std::size_t>(std::llround((train + validation) * static_cast<double>(length)));
  if (a == 0 || a >= b || b >= length) throw ConfigError("split: a split would be empty");
  return {{0, a}, {a, b}, {b, length}};
}

/// Anchors t with a complete input window and t + k inside `targets`.
inline std::vector<Sample> build_samples(std::size_t series_length, const SliceConfig& cfg,
                                         IndexRange targets) {
  const std::size_t first = cfg.min_anchor();
  std::vector<Sample> out;
  const std::size_t end = std::min(targets.end, series_length);
  for (std::size_t target = std::max(targets.begin, first + cfg.horizon); target < end; ++target)
    out.push_back({target - cfg.horizon, target});
  if (out.empty())
    throw EmptyDatasetError("samples: no anchor in target range [" +
                            std::to_string(targets.begin) + ", " + std::to_string(targets.end) +
                            ") has " + std::to_string(first) + " points of history");
  return out;
}

/// Imputed raw series, its normalized copy, and the input layout.
///
/// Samples only carry indices; inputs are gathered on demand.
class Dataset {
 public:
  Dataset(TrafficSeries raw, const ZScoreScaler& scaler, SliceConfig cfg,
          HolidayCalendar calendar = {})
      : raw_(std::make_shared<const TrafficSeries>(std::move(raw))),
        norm_(std::make_shared<const TrafficSeries>(scaler.apply(*raw_))),
        scaler_(scaler),
        cfg_(cfg),
        calendar_(std::move(calendar)) {
    if (raw_->missing_count() != 0) throw InputError("dataset: series must be imputed first");
    if (cfg_.points_per_day != raw_->points_per_day())
      throw ConfigError("dataset: slice points_per_day " + std::to_string(cfg_.points_per_day) +
                        " does not match series granularity (" +
                        std::to_string(raw_->points_per_day()) + " per day)");
    cfg_.validate();
    lags_ = cfg_.lags();
  }

  const TrafficSeries& raw() const { return *raw_; }
  const TrafficSeries& normalized() const { return *norm_; }
  const ZScoreScaler& scaler() const noexcept { return scaler_; }
  const SliceConfig& slice() const noexcept { return cfg_; }
  const HolidayCalendar& calendar() const noexcept { return calendar_; }
  std::size_t stations() const { return raw_->stations(); }
  std::size_t steps() const { return lags_.size(); }
  const std::vector<std::size_t>& lags() const noexcept { return lags_; }

  std::vector<Sample> samples(IndexRange targets) const {
    return build_samples(raw_->length(), cfg_, targets);
  }

  /// Normalized N x T input window.
  ad::Tensor inputs(const Sample& s) const {
    const std::vector<std::size_t> idx = slice_indices(s.anchor, cfg_);
    ad::Tensor x({stations(), idx.size()});
    for (std::size_t i = 0; i < stations(); ++i)
      for (std::size_t c = 0; c < idx.size(); ++c) x(i, c) = (*norm_)(i, idx[c]);
    return x;
  }

  /// N x 2 calendar flags of the anchor time, identical for every node.
  ad::Tensor features(const Sample& s) const {
    const Minutes ts = raw_->timestamp(s.anchor);
    const double weekend = is_weekend(ts) ? 1.0 : 0.0;
    const double holiday = calendar_.is_holiday(ts) ? 1.0 : 0.0;
    ad::Tensor f({stations(), kCalendarFeatures});
    for (std::size_t i = 0; i < stations(); ++i) {
      f(i, 0) = weekend;
      f(i, 1) = holiday;
    }
    return f;
  }

  /// Normalized N x 1 target.
  ad::Tensor target(const Sample& s) const { return column_at(*norm_, s.target); }

  /// Raw-unit N x 1 target.
  ad::Tensor target_raw(const Sample& s) const { return column_at(*raw_, s.target); }

 private:
  static ad::Tensor column_at(const TrafficSeries& series, std::size_t t) {
    if (t >= series.length()) throw OutOfRangeError("dataset: target index beyond series end");
    ad::Tensor y({series.stations(), 1});
    for (std::size_t i = 0; i < series.stations(); ++i) y[i] = series(i, t);
    return y;
  }

  std::shared_ptr<const TrafficSeries> raw_;
  std::shared_ptr<const TrafficSeries> norm_;
  ZScoreScaler scaler_;
  SliceConfig cfg_;
  HolidayCalendar calendar_;
  std::vector<std::size_t> lags_;
};

}  // namespace sthgcn::data
