#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "support.hpp"

using namespace sthgcn;
using namespace sthgcn::graph;
using sthgcn::testing::QuietWarnings;
using sthgcn::testing::random_graph;
using sthgcn::testing::random_tensor;
using sthgcn::testing::symmetric_eigenvalues;

namespace {

data::TrafficSeries hourly_series(const ad::Tensor& values) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < values.rows(); ++i) ids.push_back("s" + std::to_string(i));
  return data::TrafficSeries(ids, data::parse_date("2024-01-01"), 60, values);
}

ad::Tensor symmetric_from_upper(std::size_t n, const std::vector<double>& upper) {
  ad::Tensor w({n, n});
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) w(i, j) = w(j, i) = upper[k++];
  return w;
}

}  // namespace

TEST(Haversine, Examples) {
  EXPECT_EQ(haversine(30.2, 120.1, 30.2, 120.1), 0.0);
  EXPECT_NEAR(haversine(0, 0, 0, 180), std::numbers::pi * 6'371'000.0, 1e-6);
  EXPECT_NEAR(haversine(0, 0, 0, 180), 20'015'086.8, 0.05);
  EXPECT_NEAR(haversine(0, 0, 1, 0), 111'194.9, 0.05);
  EXPECT_DOUBLE_EQ(haversine(10, 20, -5, 33), haversine(-5, 33, 10, 20));
}

TEST(Haversine, OutOfRangeCoordinates) {
  EXPECT_THROW(haversine(91, 0, 0, 0), InputError);
  EXPECT_THROW(haversine(0, 0, 0, -180.5), InputError);
  EXPECT_THROW(haversine(std::nan(""), 0, 0, 0), InputError);
}

TEST(Pcc, Examples) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_NEAR(pcc(x, std::vector<double>{2, 4, 6}), 1.0, 1e-15);
  EXPECT_NEAR(pcc(x, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(pcc(x, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_EQ(pcc(x, std::vector<double>{7, 7, 7}), 0.0);
  EXPECT_THROW(pcc(x, std::vector<double>{1, 2}), InputError);
}

TEST(Pcc, SymmetricAndAffineInvariant) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-5, 5), pos(0.1, 10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(20), y(20), z(20);
    for (std::size_t i = 0; i < 20; ++i) {
      x[i] = u(rng);
      y[i] = u(rng) + 0.5 * x[i];
    }
    const double a = pos(rng), b = u(rng);
    for (std::size_t i = 0; i < 20; ++i) z[i] = a * x[i] + b;
    const double r = pcc(x, y);
    EXPECT_EQ(r, pcc(y, x));
    EXPECT_NEAR(pcc(z, y), r, 1e-12);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(Sparsify, KeepsTopTenthOfTenWeights) {
  const auto w = symmetric_from_upper(5, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  const AdjacencyMatrix a = sparsify(w, 0.9);
  EXPECT_EQ(a.edge_count(), 1u);
  EXPECT_TRUE(a(3, 4));
  EXPECT_TRUE(a(4, 3));
  EXPECT_TRUE(a.is_symmetric_hollow());
}

TEST(Sparsify, TinyKeepProportionKeepsEveryEdge) {
  const auto w = symmetric_from_upper(5, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  EXPECT_EQ(sparsify(w, 1e-9).edge_count(), 10u);
}

TEST(Sparsify, UsesAbsoluteWeightsAndKeepsTies) {
  // -0.9 outranks 0.5; three tied at 0.5 all survive.
  const auto w = symmetric_from_upper(4, {-0.9, 0.5, 0.5, 0.5, 0.1, 0.2});
  const AdjacencyMatrix a = sparsify(w, 0.5);
  EXPECT_TRUE(a(0, 1));
  EXPECT_EQ(a.edge_count(), 4u);
}

TEST(Sparsify, EdgeCountProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> p_dist(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 15;
    ad::Tensor w({n, n});
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) w(i, j) = w(j, i) = u(rng);
    const double p = p_dist(rng);
    const AdjacencyMatrix a = sparsify(w, p);
    const std::size_t m = n * (n - 1) / 2;
    const auto target = static_cast<std::size_t>(std::ceil((1 - p) * static_cast<double>(m) - 1e-9));
    EXPECT_EQ(a.edge_count(), std::max<std::size_t>(target, 1));
    EXPECT_TRUE(a.is_symmetric_hollow());
  }
}

TEST(Sparsify, AllZeroWeightsGiveEmptyGraph) {
  QuietWarnings quiet;
  EXPECT_EQ(sparsify(ad::Tensor({4, 4}), 0.5).edge_count(), 0u);
  EXPECT_THROW(sparsify(ad::Tensor({4, 4}), 1.0), InputError);
}

TEST(Spatial, KernelWeights) {
  const double one_km_lat = 1000.0 / haversine(0, 0, 1, 0);
  const std::vector<data::Station> st{{"a", 0, 0}, {"b", 0, 0}, {"c", one_km_lat, 0}};
  const ad::Tensor w = spatial_kernel_weights(st, 1000.0);
  EXPECT_EQ(w(0, 1), 1.0);
  EXPECT_NEAR(w(0, 2), std::exp(-1.0), 1e-9);
  EXPECT_EQ(w(2, 2), 0.0);
  EXPECT_THROW(spatial_kernel_weights(st, 0.0), InputError);
}

TEST(Spatial, CollinearStationsKeepNearestPairs) {
  const double step = 100.0 / haversine(0, 0, 1, 0);
  const std::vector<data::Station> st{{"a", 0, 0}, {"b", step, 0}, {"c", 2 * step, 0}};
  const AdjacencyMatrix a = build_spatial_proximity(st, 100.0, 0.5);
  EXPECT_TRUE(a(0, 1));
  EXPECT_TRUE(a(1, 2));
  EXPECT_FALSE(a(0, 2));
}

TEST(Functional, IdenticalAndAntiPhaseProfiles) {
  const std::size_t len = 24 * 14;
  ad::Tensor v({4, len});
  for (std::size_t t = 0; t < len; ++t) {
    const double s = std::sin(2 * std::numbers::pi * static_cast<double>(t % 168) / 168.0);
    v(0, t) = 10 + 3 * s;
    v(1, t) = 50 + 3 * s;
    v(2, t) = 20 - s;
    v(3, t) = std::cos(static_cast<double>(t) * 0.3) + 0.01 * static_cast<double>(t % 7);
  }
  const auto series = hourly_series(v);
  const ad::Tensor w = pcc_matrix(weekly_profiles(series, 0, len));
  EXPECT_NEAR(w(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(w(0, 2), -1.0, 1e-12);
  const AdjacencyMatrix a = build_functional_similarity(series, 0, len, 0.5);
  EXPECT_TRUE(a(0, 1));
  EXPECT_TRUE(a(0, 2));
  EXPECT_TRUE(a(1, 2));
}

TEST(Functional, PhaseGroupsKeepWithinGroupEdges) {
  const std::size_t len = 24 * 21;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0, 0.1);
  ad::Tensor v({4, len});
  std::vector<double> jitter(4 * 168);
  for (double& j : jitter) j = noise(rng);
  for (std::size_t t = 0; t < len; ++t) {
    const double h = 2 * std::numbers::pi * static_cast<double>(t % 24) / 24.0;
    const std::size_t s = t % 168;
    v(0, t) = 5 + std::sin(h) + jitter[s];  // residential
    v(1, t) = 8 + 2 * std::sin(h) + jitter[168 + s];
    v(2, t) = 5 + std::sin(h + 2.0) + jitter[336 + s];  // industrial
    v(3, t) = 9 + 3 * std::sin(h + 2.0) + jitter[504 + s];
  }
  const auto series = hourly_series(v);
  const ad::Tensor w = pcc_matrix(weekly_profiles(series, 0, len));
  for (auto [i, j] : {std::pair{0, 2}, {0, 3}, {1, 2}, {1, 3}}) {
    EXPECT_LT(std::abs(w(i, j)), std::abs(w(0, 1)));
    EXPECT_LT(std::abs(w(i, j)), std::abs(w(2, 3)));
  }
  const AdjacencyMatrix a = build_functional_similarity(series, 0, len, 0.5);
  EXPECT_TRUE(a(0, 1));
  EXPECT_TRUE(a(2, 3));
  EXPECT_EQ(a.edge_count(), 3u);
}

TEST(Functional, ProfilesAverageWholeMondayWeeks) {
  // Starts on a Wednesday: the first full week begins five days in.
  const std::size_t len = 24 * 16;
  ad::Tensor v({1, len});
  for (std::size_t t = 0; t < len; ++t) v(0, t) = static_cast<double>(t);
  data::TrafficSeries s({"a"}, data::parse_date("2024-01-03"), 60, v);
  const ad::Tensor p = weekly_profiles(s, 0, len);
  EXPECT_EQ(p(0, 0), 120.0);
  EXPECT_EQ(p(0, 167), 287.0);
  EXPECT_THROW(weekly_profiles(s, 0, 24 * 10), InsufficientDataError);
}

TEST(RecentTrend, WindowLocality) {
  ad::Tensor v({3, 10});
  for (std::size_t t = 0; t < 10; ++t) {
    v(0, t) = t < 6 ? 100.0 - static_cast<double>(t * t) : std::sin(static_cast<double>(t));
    v(1, t) = t < 6 ? static_cast<double>(t) : std::sin(static_cast<double>(t));
    v(2, t) = static_cast<double>((t * 7) % 5);
  }
  const auto w = recent_trend_weights(hourly_series(v), 9, 4);
  EXPECT_NEAR(w(0, 1), 1.0, 1e-15);
  EXPECT_THROW(recent_trend_weights(hourly_series(v), 2, 4), OutOfRangeError);
}

TEST(RecentTrend, EdgeSetChangesWhenATrendFlips) {
  const auto series = hourly_series(ad::Tensor(
      {3, 5}, {1, 2, 3, 4, 5, /**/ 1, 2, 3, 4, -10, /**/ 4, 1, 3, 2, 5}));
  const AdjacencyMatrix before = build_recent_trend(series, 3, 4, 2.0 / 3.0);
  const AdjacencyMatrix after = build_recent_trend(series, 4, 4, 2.0 / 3.0);
  EXPECT_EQ(before.edge_count(), 1u);
  EXPECT_TRUE(before(0, 1));
  EXPECT_FALSE(after(0, 1));
  EXPECT_FALSE(before == after);
}

TEST(RecentTrend, NoFutureLeakage) {
  std::mt19937_64 rng(13);
  const auto base = hourly_series(random_tensor({8, 200}, rng, 0, 100));
  for (std::size_t t : {47, 60, 123, 198}) {
    auto corrupted = base;
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t u = t + 1; u < 200; ++u) corrupted(i, u) = 1e6 * static_cast<double>(u % 3);
    EXPECT_EQ(recent_trend_weights(base, t, 48), recent_trend_weights(corrupted, t, 48));
    EXPECT_EQ(build_recent_trend(base, t, 48, 0.9), build_recent_trend(corrupted, t, 48, 0.9));
  }
}

TEST(Laplacian, Examples) {
  AdjacencyMatrix k2(2);
  k2.set_edge(0, 1);
  EXPECT_EQ(normalized_laplacian(k2), ad::Tensor({2, 2}, {1, -1, -1, 1}));
  const ad::Tensor eye = normalized_laplacian(AdjacencyMatrix(3));
  EXPECT_EQ(eye, ad::Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  EXPECT_THROW(normalized_laplacian(AdjacencyMatrix(0)), InputError);
}

TEST(Laplacian, SpectrumWithinZeroTwo) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ev = symmetric_eigenvalues(normalized_laplacian(random_graph(6, 0.5, rng)));
    EXPECT_GE(ev.front(), -1e-9);
    EXPECT_LE(ev.back(), 2.0 + 1e-9);
  }
}

TEST(LambdaMax, Examples) {
  AdjacencyMatrix k2(2);
  k2.set_edge(0, 1);
  EXPECT_NEAR(lambda_max(normalized_laplacian(k2)), 2.0, 1e-9);
  EXPECT_NEAR(lambda_max(normalized_laplacian(AdjacencyMatrix(4))), 1.0, 1e-9);
}

TEST(LambdaMax, MatchesDenseEigensolver) {
  std::mt19937_64 rng(15);
  std::size_t warnings = 0, fallbacks = 0;
  auto previous = set_warning_sink([&](const std::string&) { ++warnings; });
  for (int trial = 0; trial < 100; ++trial) {
    const ad::Tensor lap = normalized_laplacian(random_graph(8, 0.1 + 0.008 * trial, rng));
    const auto ev = symmetric_eigenvalues(lap);
    const std::size_t before = warnings;
    const double got = lambda_max(lap);
    if (warnings == before) {
      EXPECT_NEAR(got, ev.back(), 1e-8);
      continue;
    }
    // Only a nearly degenerate top pair can stall the iteration.
    ++fallbacks;
    EXPECT_EQ(got, 2.0);
    EXPECT_LT(ev[ev.size() - 1] - ev[ev.size() - 2], 0.01);
  }
  set_warning_sink(previous);
  EXPECT_LE(fallbacks, 2u);
}

TEST(LambdaMax, FallsBackToTwoWithoutConvergence) {
  std::vector<std::string> seen;
  auto previous = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  AdjacencyMatrix path(5);
  for (std::size_t i = 0; i + 1 < 5; ++i) path.set_edge(i, i + 1);
  PowerIterationOptions opt;
  opt.max_iterations = 2;
  opt.tolerance = 1e-15;
  EXPECT_EQ(lambda_max(normalized_laplacian(path), opt), 2.0);
  set_warning_sink(previous);
  EXPECT_EQ(seen.size(), 1u);
}

TEST(ScaledLaplacianTest, Examples) {
  AdjacencyMatrix k2(2);
  k2.set_edge(0, 1);
  EXPECT_EQ(scaled_laplacian(normalized_laplacian(k2), 2.0).matrix(),
            ad::Tensor({2, 2}, {0, -1, -1, 0}));
  const ad::Tensor eye = normalized_laplacian(AdjacencyMatrix(2));
  EXPECT_EQ(scaled_laplacian(eye, 1.0).matrix(), eye);
  EXPECT_THROW(scaled_laplacian(eye, 0.0), InputError);
}

TEST(ScaledLaplacianTest, SpectrumWithinUnitInterval) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const auto lt = scaled_laplacian(random_graph(7, 0.4, rng));
    const auto ev = symmetric_eigenvalues(lt.matrix());
    EXPECT_GE(ev.front(), -1.0 - 1e-9);
    EXPECT_LE(ev.back(), 1.0 + 1e-9);
  }
}

TEST(Chebyshev, MatchesDenseMatrixPolynomials) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 7, order = 1 + trial % 5;
    const auto lt = scaled_laplacian(random_graph(n, 0.5, rng));
    const ad::Tensor x = random_tensor({n, 3}, rng);
    const auto basis = chebyshev_basis(lt, x, order);
    const auto dense = sthgcn::testing::dense_chebyshev_matrices(lt.matrix(), order);
    ASSERT_EQ(basis.size(), order);
    for (std::size_t k = 0; k < order; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += dense[k](i, j) * x(j, c);
          EXPECT_NEAR(basis[k](i, c), s, 1e-10);
        }
  }
}

TEST(Chebyshev, TwoNodeAndEmptyGraphs) {
  AdjacencyMatrix k2(2);
  k2.set_edge(0, 1);
  const ScaledLaplacian lt(ad::Tensor({2, 2}, {0, -1, -1, 0}), 2.0);
  const auto b = chebyshev_basis(lt, ad::Tensor::column({1, 2}), 3);
  EXPECT_EQ(b[1], ad::Tensor::column({-2, -1}));
  EXPECT_EQ(b[2], ad::Tensor::column({1, 2}));
  const auto id = scaled_laplacian(AdjacencyMatrix(3));
  const ad::Tensor x = ad::Tensor::column({1, -2, 3});
  for (const auto& t : chebyshev_basis(id, x, 4)) EXPECT_LE(ad::max_abs_diff(t, x), 1e-12);
  EXPECT_THROW(chebyshev_basis(lt, ad::Tensor::column({1, 2, 3}), 2), DimensionError);
}

TEST(Chebyshev, NodeRelabelingIsExact) {
  std::mt19937_64 rng(18);
  const auto lt = scaled_laplacian(random_graph(9, 0.5, rng));
  const ad::Tensor x = random_tensor({9, 4}, rng);
  const auto perm = sthgcn::testing::random_permutation(9, rng);
  ad::Tensor px({9, 4});
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t c = 0; c < 4; ++c) px(i, c) = x(perm[i], c);
  const auto a = chebyshev_basis(lt, x, 4);
  const auto b = chebyshev_basis(lt.permuted(perm), px, 4);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(b[k](i, c), a[k](perm[i], c));
}

TEST(PccTimeline, SelfColumnAndStationarity) {
  const std::size_t len = 24 * 6;
  ad::Tensor v({3, len});
  for (std::size_t t = 0; t < len; ++t) {
    const double h = 2 * std::numbers::pi * static_cast<double>(t) / 24.0;
    v(0, t) = std::sin(h);
    v(1, t) = std::sin(h + 1.0);
    v(2, t) = std::sin(h * 1.37);  // drifts in phase against station 0
  }
  const auto series = hourly_series(v);
  const std::vector<std::size_t> anchors{47, 71, 95, 119};
  const ad::Tensor rows = pcc_timeline(series, 0, anchors, 48);
  double drift = 0.0;
  for (std::size_t r = 0; r < anchors.size(); ++r) {
    EXPECT_NEAR(rows(r, 0), 1.0, 1e-12);
    EXPECT_NEAR(rows(r, 1), rows(0, 1), 1e-9);
    drift = std::max(drift, std::abs(rows(r, 2) - rows(0, 2)));
  }
  EXPECT_GT(drift, 0.05);
  std::ostringstream out;
  write_pcc_timeline(out, series, anchors, rows);
  EXPECT_EQ(out.str().substr(0, 20), "timestamp,s0,s1,s2\n2");
  EXPECT_THROW(pcc_timeline(series, 0, {10}, 48), OutOfRangeError);
}

TEST(EdgeList, RoundTrip) {
  std::mt19937_64 rng(19);
  const AdjacencyMatrix a = random_graph(12, 0.3, rng);
  std::stringstream io;
  write_edge_list(io, a, "spatial", {{"sigma", "1000"}, {"keep", "0.9"}});
  const EdgeListFile f = read_edge_list(io);
  EXPECT_EQ(f.adjacency, a);
  EXPECT_EQ(f.metadata.at("construction"), "spatial");
  EXPECT_EQ(f.metadata.at("sigma"), "1000");
  std::istringstream bad("i,j\n0,1\n");
  EXPECT_THROW(read_edge_list(bad), InputError);
  std::istringstream loop("# construction=x,nodes=3\ni,j\n1,1\n");
  EXPECT_THROW(read_edge_list(loop), InputError);
}

TEST(Adjacency, PermutedAndValidation) {
  AdjacencyMatrix a(3);
  a.set_edge(0, 1);
  EXPECT_THROW(a.set_edge(2, 2), InputError);
  EXPECT_THROW(a.set_edge(0, 3), InputError);
  const AdjacencyMatrix p = a.permuted({2, 0, 1});
  EXPECT_TRUE(p(1, 2));
  EXPECT_EQ(p.edge_count(), 1u);
  EXPECT_EQ(a.degree(0), 1u);
}

TEST(GraphSetTest, SnapshotsAndCache) {
  std::mt19937_64 rng(20);
  auto series = std::make_shared<const data::TrafficSeries>(hourly_series(random_tensor({6, 100}, rng)));
  const AdjacencyMatrix s = random_graph(6, 0.5, rng);
  GraphSet set(s, std::nullopt, RecentTrendSpec{24, 0.8}, series, 2);
  EXPECT_EQ(set.kinds(), (std::vector<GraphKind>{GraphKind::spatial, GraphKind::recent_trend}));
  const GraphSnapshot a = set.at(50);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0]->matrix(), scaled_laplacian(s).matrix());
  EXPECT_EQ(a[1]->matrix(), scaled_laplacian(build_recent_trend(*series, 50, 24, 0.8)).matrix());
  set.at(50);
  EXPECT_EQ(set.cache_hits(), 1u);
  EXPECT_EQ(set.cache_misses(), 1u);
  set.at(51);
  set.at(52);
  EXPECT_EQ(set.cache_size(), 2u);
  set.at(50);
  EXPECT_EQ(set.cache_misses(), 4u);
  EXPECT_THROW(GraphSet(AdjacencyMatrix(5), std::nullopt, RecentTrendSpec{}, series), DimensionError);
  GraphSet fixed(s, s, std::nullopt, nullptr);
  EXPECT_THROW(fixed.dynamic_at(3), ConfigError);
  EXPECT_EQ(fixed.at(0).size(), 2u);
}
