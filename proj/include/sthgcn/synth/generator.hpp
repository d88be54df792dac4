#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/adjacency.hpp"
#include "sthgcn/graph/geo.hpp"

namespace sthgcn::synth {

/// Parameters of the planted-structure generator.
///
/// Node i carries base_i + A_d,i sin(2 pi (t + phi_i) / T_o)
/// + A_w,i sin(2 pi t / (7 T_o)), plus `mixing` times the mean clean signal
/// of its grid neighbors, plus AR(1) Gaussian noise, clipped at 0. The
/// phase phi_i is the cluster phase plus a per-node jitter. Clusters are
/// laid out in a checkerboard over the grid, so grid neighbors always
/// belong to different clusters.
struct SynthSpec {
  std::size_t nodes = 20;
  std::size_t weeks = 8;
  int granularity = 15;                  // minutes
  std::string start = "2024-01-01";      // a Monday
  std::size_t clusters = 2;
  double cluster_phase_step = 0.25;      // phase offset between clusters, in days
  double phase_jitter = 0.02;            // per-node phase jitter (uniform +-), in days
  double base = 100.0;
  double daily_amplitude = 50.0;
  double weekly_amplitude = 20.0;
  double amplitude_jitter = 0.2;         // relative, uniform +-
  double mixing = 0.3;
  double noise_fraction = 0.1;           // stationary noise std / daily amplitude
  double noise_ar = 0.9;                 // AR(1) coefficient; 0 gives white noise
  double noise_shared = 0.5;             // share of noise variance common to a cluster
  double grid_spacing = 100.0;           // meters
  double grid_jitter = 0.2;              // relative to spacing, uniform +-
  double origin_latitude = 30.25;
  double origin_longitude = 120.15;
  std::uint64_t seed = 7;

  void validate() const {
    if (nodes < 2) throw ConfigError("synth: need at least 2 nodes");
    if (weeks < 1) throw ConfigError("synth: need at least 1 week");
    if (granularity <= 0 || 1440 % granularity != 0)
      throw ConfigError("synth: granularity must divide 1440 minutes");
    if (clusters < 1 || clusters > nodes) throw ConfigError("synth: cluster count out of range");
    if (!(noise_fraction >= 0.0)) throw ConfigError("synth: noise fraction must be >= 0");
    if (!(noise_ar >= 0.0 && noise_ar < 1.0)) throw ConfigError("synth: noise_ar must be in [0, 1)");
    if (!(noise_shared >= 0.0 && noise_shared <= 1.0))
      throw ConfigError("synth: noise_shared must be in [0, 1]");
    if (!(grid_spacing > 0.0)) throw ConfigError("synth: grid spacing must be positive");
    if (!(grid_jitter >= 0.0 && grid_jitter < 0.5)) throw ConfigError("synth: grid jitter must be in [0, 0.5)");
    if (!(amplitude_jitter >= 0.0 && amplitude_jitter < 1.0))
      throw ConfigError("synth: amplitude jitter must be in [0, 1)");
    data::parse_date(start);
  }
};

struct SynthData {
  data::TrafficSeries series;
  std::vector<data::Station> stations;
  std::vector<std::size_t> cluster;        // per node
  graph::AdjacencyMatrix neighbors;        // grid neighbors used for mixing
  graph::AdjacencyMatrix same_cluster;     // planted functional structure
};

inline std::size_t grid_columns(std::size_t nodes) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(nodes))));
}

inline SynthData generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t n = spec.nodes;
  const std::size_t per_day = static_cast<std::size_t>(1440 / spec.granularity);
  const std::size_t len = spec.weeks * 7 * per_day;
  const std::size_t cols = grid_columns(n);

  // Layout and cluster assignment.
  std::vector<data::Station> stations(n);
  std::vector<std::size_t> cluster(n);
  constexpr double kMetersPerDegree = graph::kEarthRadiusMeters * std::numbers::pi / 180.0;
  const double lat_rad = spec.origin_latitude * std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = i / cols, c = i % cols;
    const double x = (static_cast<double>(c) + spec.grid_jitter * unit(rng)) * spec.grid_spacing;
    const double y = (static_cast<double>(r) + spec.grid_jitter * unit(rng)) * spec.grid_spacing;
    char id[32];
    std::snprintf(id, sizeof id, "S%02zu", i);
    stations[i] = {id, spec.origin_latitude + y / kMetersPerDegree,
                   spec.origin_longitude + x / (kMetersPerDegree * std::cos(lat_rad))};
    cluster[i] = (r + c) % spec.clusters;
  }
  graph::AdjacencyMatrix neighbors(n), same(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t ri = i / cols, ci = i % cols, rj = j / cols, cj = j % cols;
      const std::size_t dr = ri > rj ? ri - rj : rj - ri, dc = ci > cj ? ci - cj : cj - ci;
      if (dr + dc == 1) neighbors.set_edge(i, j);
      if (cluster[i] == cluster[j]) same.set_edge(i, j);
    }

  // Clean periodic signals.
  std::vector<double> base(n), amp_d(n), amp_w(n), phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = spec.base * (1.0 + 0.5 * spec.amplitude_jitter * unit(rng));
    amp_d[i] = spec.daily_amplitude * (1.0 + spec.amplitude_jitter * unit(rng));
    amp_w[i] = spec.weekly_amplitude * (1.0 + spec.amplitude_jitter * unit(rng));
    phase[i] = (static_cast<double>(cluster[i]) * spec.cluster_phase_step + spec.phase_jitter * unit(rng)) *
               static_cast<double>(per_day);
  }
  const double two_pi = 2.0 * std::numbers::pi;
  ad::Tensor clean({n, len});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < len; ++t) {
      const double td = static_cast<double>(t);
      clean(i, t) = base[i] + amp_d[i] * std::sin(two_pi * (td + phase[i]) / static_cast<double>(per_day)) +
                    amp_w[i] * std::sin(two_pi * td / static_cast<double>(7 * per_day));
    }

  // AR(1) noise with a cluster-common and a node-specific part.
  const double sigma = spec.noise_fraction * spec.daily_amplitude;
  const double innov = std::sqrt(1.0 - spec.noise_ar * spec.noise_ar);
  const double w_shared = std::sqrt(spec.noise_shared), w_own = std::sqrt(1.0 - spec.noise_shared);
  std::vector<double> shared_state(spec.clusters), own_state(n);
  for (double& s : shared_state) s = gauss(rng);
  for (double& s : own_state) s = gauss(rng);

  ad::Tensor values({n, len});
  for (std::size_t t = 0; t < len; ++t) {
    if (t > 0) {
      for (double& s : shared_state) s = spec.noise_ar * s + innov * gauss(rng);
      for (double& s : own_state) s = spec.noise_ar * s + innov * gauss(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double mix = 0.0;
      const std::size_t deg = neighbors.degree(i);
      if (deg) {
        for (std::size_t j = 0; j < n; ++j)
          if (neighbors(i, j)) mix += clean(j, t);
        mix /= static_cast<double>(deg);
      }
      const double noise = sigma * (w_shared * shared_state[cluster[i]] + w_own * own_state[i]);
      values(i, t) = std::max(0.0, clean(i, t) + spec.mixing * mix + noise);
    }
  }

  std::vector<std::string> ids;
  for (const auto& s : stations) ids.push_back(s.id);
  return {data::TrafficSeries(std::move(ids), data::parse_date(spec.start), spec.granularity,
                              std::move(values)),
          std::move(stations), std::move(cluster), std::move(neighbors), std::move(same)};
}

}  // namespace sthgcn::synth
