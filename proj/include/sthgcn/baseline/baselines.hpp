#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"

namespace sthgcn::baseline {

// Historical average: mean per (node, slot of the week) over the training
// range. Slots are keyed by minute of the week, so the state is independent
// of where the series starts. Unseen slots fall back to the node mean.
struct HAState {
  std::size_t nodes = 0;
  std::size_t slots = 0;      // 7 * points per day
  int granularity = 0;
  std::vector<double> sum;    // nodes x slots
  std::vector<double> count;  // nodes x slots
  std::vector<double> node_mean;

  std::size_t slot_of(data::Minutes ts) const {
    return static_cast<std::size_t>(data::minute_of_week(ts) / granularity);
  }
};

inline HAState ha_fit(const data::TrafficSeries& series, std::size_t begin, std::size_t end) {
  if (begin >= end || end > series.length()) throw InputError("historical average: empty training range");
  HAState s;
  s.nodes = series.stations();
  s.granularity = series.granularity();
  s.slots = 7 * series.points_per_day();
  s.sum.assign(s.nodes * s.slots, 0.0);
  s.count.assign(s.nodes * s.slots, 0.0);
  s.node_mean.assign(s.nodes, 0.0);
  std::vector<double> node_count(s.nodes, 0.0);
  for (std::size_t t = begin; t < end; ++t) {
    const std::size_t slot = s.slot_of(series.timestamp(t));
    for (std::size_t i = 0; i < s.nodes; ++i) {
      const double v = series(i, t);
      if (data::is_missing(v)) continue;
      s.sum[i * s.slots + slot] += v;
      s.count[i * s.slots + slot] += 1.0;
      s.node_mean[i] += v;
      node_count[i] += 1.0;
    }
  }
  for (std::size_t i = 0; i < s.nodes; ++i) {
    if (node_count[i] == 0.0)
      throw InputError("historical average: station " + series.station_ids()[i] +
                       " has no training data");
    s.node_mean[i] /= node_count[i];
  }
  return s;
}

/// N x 1 prediction for the given target time.
inline ad::Tensor ha_predict(const HAState& s, data::Minutes target) {
  if (s.nodes == 0) throw ContractError("historical average: state is not fitted");
  const std::size_t slot = s.slot_of(target);
  ad::Tensor out({s.nodes, 1});
  for (std::size_t i = 0; i < s.nodes; ++i) {
    const double c = s.count[i * s.slots + slot];
    out[i] = c > 0.0 ? s.sum[i * s.slots + slot] / c : s.node_mean[i];
  }
  return out;
}

/// x^{t+k-period}, the value one period before the target.
inline ad::Tensor seasonal_naive_predict(const data::TrafficSeries& series, std::size_t t,
                                         std::size_t k, std::size_t period) {
  if (period == 0) throw InputError("seasonal naive: period must be positive");
  if (t + k < period)
    throw OutOfRangeError("seasonal naive: target " + std::to_string(t + k) +
                          " has no value one period (" + std::to_string(period) + ") earlier");
  const std::size_t src = t + k - period;
  if (src >= series.length()) throw OutOfRangeError("seasonal naive: source index beyond series end");
  ad::Tensor out({series.stations(), 1});
  for (std::size_t i = 0; i < series.stations(); ++i) out[i] = series(i, src);
  return out;
}

}  // namespace sthgcn::baseline
