#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/correlation.hpp"
#include "sthgcn/graph/geo.hpp"
#include "sthgcn/log.hpp"

namespace sthgcn::graph {

/// Binary, symmetric N x N adjacency with an empty diagonal.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n) : n_(n), bits_(n * n, 0) {}

  std::size_t nodes() const noexcept { return n_; }

  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }

  /// Adds or removes the undirected edge {i, j}; self loops are rejected.
  void set_edge(std::size_t i, std::size_t j, bool on = true) {
    if (i >= n_ || j >= n_) throw InputError("adjacency: node index out of range");
    if (i == j) throw InputError("adjacency: self loops are not allowed");
    bits_[i * n_ + j] = bits_[j * n_ + i] = on ? 1 : 0;
  }

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) e += bits_[i * n_ + j];
    return e;
  }

  std::size_t degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < n_; ++j) d += bits_[i * n_ + j];
    return d;
  }

  /// Undirected edges as (i, j) with i < j, in row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (bits_[i * n_ + j]) out.emplace_back(i, j);
    return out;
  }

  bool is_symmetric_hollow() const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (bits_[i * n_ + i]) return false;
      for (std::size_t j = i + 1; j < n_; ++j)
        if (bits_[i * n_ + j] != bits_[j * n_ + i]) return false;
    }
    return true;
  }

  /// Relabels nodes: node i of the result is node perm[i] of this graph.
  AdjacencyMatrix permuted(const std::vector<std::size_t>& perm) const {
    AdjacencyMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out.bits_[i * n_ + j] = bits_[perm[i] * n_ + perm[j]];
    return out;
  }

  friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Number of undirected edges the threshold targets: ceil((1 - p) * M).
inline std::size_t kept_edge_target(std::size_t nodes, double keep) {
  const std::size_t m = nodes * (nodes - (nodes ? 1 : 0)) / 2;
  if (m == 0) return 0;
  const double want = (1.0 - keep) * static_cast<double>(m);
  // Absorb representation error such as (1 - 0.9) * 190 = 18.999999999999996.
  auto r = static_cast<std::size_t>(std::ceil(want - 1e-9 * static_cast<double>(m)));
  return std::clamp<std::size_t>(r, 1, m);
}

/// Binarizes a symmetric weight matrix: edge {i, j} is kept when |w_ij| is at
/// least the ceil((1 - p) M)-th largest absolute upper-triangle weight.
/// Ties at the threshold are all kept. Zero weights never become edges.
inline AdjacencyMatrix sparsify(const ad::Tensor& weights, double keep) {
  if (!(keep > 0.0 && keep < 1.0)) throw InputError("sparsify: keep proportion must be in (0, 1)");
  if (weights.rank() != 2 || weights.rows() != weights.cols())
    throw DimensionError("sparsify: weights must be square");
  const std::size_t n = weights.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!(weights(i, j) == weights(j, i)) && !(std::isnan(weights(i, j)) && std::isnan(weights(j, i))))
        throw InputError("sparsify: weight matrix is not symmetric");
  AdjacencyMatrix adj(n);
  if (n < 2) return adj;
  std::vector<double> mags;
  mags.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::abs(weights(i, j));
      if (std::isnan(w)) throw InputError("sparsify: NaN weight");
      mags.push_back(w);
    }
  const std::size_t r = kept_edge_target(n, keep);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(r - 1), mags.end(),
                   std::greater<>());
  const double eps = mags[r - 1];
  if (eps <= 0.0) warn("sparsify: threshold is zero; only non-zero weights become edges");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::abs(weights(i, j));
      if (w >= eps && w > 0.0) adj.set_edge(i, j);
    }
  if (adj.edge_count() == 0) warn("sparsify: all weights are zero; graph has no edges");
  return adj;
}

/// Gaussian kernel exp(-d^2 / sigma^2) of pairwise great-circle distances.
inline ad::Tensor spatial_kernel_weights(const std::vector<data::Station>& stations, double sigma) {
  if (!(sigma > 0.0)) throw InputError("spatial proximity: sigma must be positive");
  const std::size_t n = stations.size();
  if (n == 0) throw InputError("spatial proximity: no stations");
  ad::Tensor w({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = haversine(stations[i].latitude, stations[i].longitude,
                                 stations[j].latitude, stations[j].longitude);
      w(i, j) = w(j, i) = std::exp(-(d * d) / (sigma * sigma));
    }
  return w;
}

inline AdjacencyMatrix build_spatial_proximity(const std::vector<data::Station>& stations,
                                               double sigma, double keep) {
  return sparsify(spatial_kernel_weights(stations, sigma), keep);
}

/// Pairwise PCC of the rows of `profiles` (N x L).
inline ad::Tensor pcc_matrix(const ad::Tensor& profiles) {
  const std::size_t n = profiles.rows();
  ad::Tensor w({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) w(i, j) = w(j, i) = pcc(profiles.row(i), profiles.row(j));
  return w;
}

/// Average weekly profile (N x 7*T_o) over the complete Monday-aligned weeks
/// inside columns [begin, end) of `series`.
inline ad::Tensor weekly_profiles(const data::TrafficSeries& series, std::size_t begin,
                                  std::size_t end) {
  using data::kMinutesPerWeek;
  if (end > series.length() || begin >= end)
    throw InputError("functional similarity: empty training range");
  const std::size_t week = 7 * series.points_per_day();
  // First Monday 00:00 at or after `begin`.
  const data::Minutes ts = series.timestamp(begin);
  const data::Minutes mow = data::minute_of_week(ts);
  const data::Minutes to_monday = mow == 0 ? 0 : kMinutesPerWeek - mow;
  std::size_t first = series.lower_index(ts + to_monday);
  if (first < series.length() && data::minute_of_week(series.timestamp(first)) != 0) first = end;
  const std::size_t weeks = first < end ? (end - first) / week : 0;
  if (weeks == 0)
    throw InsufficientDataError("functional similarity: training range holds no complete "
                                "Monday-aligned week");
  ad::Tensor prof({series.stations(), week});
  for (std::size_t i = 0; i < series.stations(); ++i)
    for (std::size_t s = 0; s < week; ++s) {
      double sum = 0.0;
      for (std::size_t w = 0; w < weeks; ++w) sum += series(i, first + w * week + s);
      prof(i, s) = sum / static_cast<double>(weeks);
    }
  return prof;
}

inline AdjacencyMatrix build_functional_similarity(const data::TrafficSeries& series,
                                                   std::size_t begin, std::size_t end,
                                                   double keep) {
  return sparsify(pcc_matrix(weekly_profiles(series, begin, end)), keep);
}

/// Pairwise PCC over the H points ending at anchor t (inclusive).
inline ad::Tensor recent_trend_weights(const data::TrafficSeries& series, std::size_t t,
                                       std::size_t history) {
  if (history < 2) throw InputError("recent trend: history must be >= 2");
  if (t >= series.length()) throw OutOfRangeError("recent trend: anchor beyond series end");
  if (t + 1 < history)
    throw OutOfRangeError("recent trend: anchor " + std::to_string(t) + " needs " +
                          std::to_string(history) + " points of history");
  const std::size_t n = series.stations();
  ad::Tensor window({n, history});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t h = 0; h < history; ++h) window(i, h) = series(i, t + 1 - history + h);
  return pcc_matrix(window);
}

inline AdjacencyMatrix build_recent_trend(const data::TrafficSeries& series, std::size_t t,
                                          std::size_t history, double keep) {
  return sparsify(recent_trend_weights(series, t, history), keep);
}

}  // namespace sthgcn::graph
