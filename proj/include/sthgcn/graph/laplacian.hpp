#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/adjacency.hpp"
#include "sthgcn/log.hpp"

namespace sthgcn::graph {

/// L = I - D^{-1/2} A D^{-1/2}; isolated nodes keep a unit diagonal.
inline ad::Tensor normalized_laplacian(const AdjacencyMatrix& adj) {
  const std::size_t n = adj.nodes();
  if (n == 0) throw InputError("laplacian: empty graph");
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = adj.degree(i);
    inv_sqrt[i] = d ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
  }
  ad::Tensor lap({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    lap(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (adj(i, j)) lap(i, j) = -(inv_sqrt[i] * inv_sqrt[j]);
  }
  return lap;
}

struct PowerIterationOptions {
  double shift = 2.0;
  double tolerance = 1e-9;
  std::size_t max_iterations = 10'000;
};

/// Largest eigenvalue of a symmetric matrix whose spectrum lies in [0, 2],
/// by power iteration on L + shift * I. The iteration stops once the
/// eigen-residual norm drops below the tolerance, or once the remaining
/// rise of the Rayleigh quotient, extrapolated from its geometric decay,
/// drops below a tenth of it; the quotient plus that remainder is returned.
/// The second test matters when the top two eigenvalues are close: the
/// quotient then converges long before the eigenvector does. The quotient
/// approaches from below, so stopping on it alone would leave 2L/lambda - I
/// with eigenvalues slightly above 1. Without convergence the upper bound 2
/// is returned and a warning is issued.
inline double lambda_max(const ad::Tensor& lap, const PowerIterationOptions& opt = {}) {
  const std::size_t n = lap.rows();
  if (lap.cols() != n) throw DimensionError("lambda_max: matrix must be square");
  // Fixed pseudo-random start: a symmetric start vector can be exactly
  // orthogonal to the dominant eigenvector on regular graphs.
  std::mt19937_64 rng(0x5eed1a5ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n), w(n);
  double norm = 0.0;
  for (double& x : v) {
    x = dist(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;

  double prev_mu = 0.0, prev_step = -1.0;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = opt.shift * v[i];
      for (std::size_t j = 0; j < n; ++j) acc += lap(i, j) * v[j];
      w[i] = acc;
      mu += v[i] * acc;
    }
    double res = 0.0, wn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w[i] - mu * v[i];
      res += r * r;
      wn += w[i] * w[i];
    }
    if (std::sqrt(res) <= opt.tolerance) return mu - opt.shift;
    if (it > 0) {
      // The quotient rises monotonically; rate = ratio of successive steps.
      const double step = mu - prev_mu;
      if (step >= 0.0 && prev_step > 0.0) {
        const double rate = step / prev_step;
        if (rate < 1.0) {
          const double remaining = step * rate / (1.0 - rate);
          if (remaining <= 0.1 * opt.tolerance) return mu + remaining - opt.shift;
        }
      }
      prev_step = step;
    }
    prev_mu = mu;
    wn = std::sqrt(wn);
    if (wn == 0.0) break;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
  }
  warn("lambda_max: power iteration did not converge; using upper bound 2");
  return 2.0;
}

/// 2 L / lambda_max - I, with its non-zero pattern per row.
class ScaledLaplacian {
 public:
  ScaledLaplacian() = default;
  ScaledLaplacian(ad::Tensor matrix, double lambda_max)
      : matrix_(std::move(matrix)), lambda_max_(lambda_max) {
    index_rows();
  }

  std::size_t nodes() const { return matrix_.rows(); }
  const ad::Tensor& matrix() const noexcept { return matrix_; }
  double lambda_max() const noexcept { return lambda_max_; }

  struct Entry {
    std::size_t col;
    double value;
  };
  const std::vector<Entry>& row_entries(std::size_t i) const { return rows_[i]; }

  /// Same operator after relabeling: node i of the result is node perm[i].
  ScaledLaplacian permuted(const std::vector<std::size_t>& perm) const {
    const std::size_t n = nodes();
    ad::Tensor m({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = matrix_(perm[i], perm[j]);
    return ScaledLaplacian(std::move(m), lambda_max_);
  }

 private:
  void index_rows() {
    const std::size_t n = matrix_.rows();
    rows_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (matrix_(i, j) != 0.0) rows_[i].push_back({j, matrix_(i, j)});
  }

  ad::Tensor matrix_;
  double lambda_max_ = 2.0;
  std::vector<std::vector<Entry>> rows_;
};

inline ScaledLaplacian scaled_laplacian(const ad::Tensor& lap, double lmax) {
  if (!(lmax > 0.0)) throw InputError("scaled laplacian: lambda_max must be positive");
  const std::size_t n = lap.rows();
  ad::Tensor m({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 2.0 * lap(i, j) / lmax - (i == j ? 1.0 : 0.0);
  return ScaledLaplacian(std::move(m), lmax);
}

inline ScaledLaplacian scaled_laplacian(const AdjacencyMatrix& adj,
                                        const PowerIterationOptions& opt = {}) {
  const ad::Tensor lap = normalized_laplacian(adj);
  return scaled_laplacian(lap, lambda_max(lap, opt));
}

/// Chebyshev terms T_k(L~) X for k < order, by the three-term recurrence.
///
/// Each row sum adds its non-zero terms in ascending order of value, so the
/// result of a node depends only on the multiset of its neighbor terms and
/// not on how nodes are numbered.
inline std::vector<ad::Tensor> chebyshev_basis(const ScaledLaplacian& lt, const ad::Tensor& x,
                                               std::size_t order) {
  const std::size_t n = lt.nodes();
  if (x.rows() != n)
    throw DimensionError("chebyshev basis: signal has " + std::to_string(x.rows()) +
                         " rows for " + std::to_string(n) + " nodes");
  if (order == 0) throw InputError("chebyshev basis: order must be >= 1");
  const std::size_t cols = x.cols();
  auto apply = [&](const ad::Tensor& in) {
    ad::Tensor out({n, cols});
    std::vector<double> terms;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& entries = lt.row_entries(i);
      for (std::size_t c = 0; c < cols; ++c) {
        terms.clear();
        for (const auto& e : entries) terms.push_back(e.value * in(e.col, c));
        std::sort(terms.begin(), terms.end());
        double acc = 0.0;
        for (double t : terms) acc += t;
        out(i, c) = acc;
      }
    }
    return out;
  };
  std::vector<ad::Tensor> basis;
  basis.reserve(order);
  basis.push_back(x);
  if (order > 1) basis.push_back(apply(x));
  for (std::size_t k = 2; k < order; ++k) {
    ad::Tensor next = apply(basis[k - 1]);
    const ad::Tensor& prev = basis[k - 2];
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = 2.0 * next[i] - prev[i];
    basis.push_back(std::move(next));
  }
  return basis;
}

}  // namespace sthgcn::graph
