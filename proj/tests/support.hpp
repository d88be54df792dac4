#pragma once

// Helpers shared by the unit and acceptance tests: random tensors and
// graphs, central finite differences, and a dense eigensolver oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sthgcn/sthgcn.hpp"

namespace sthgcn::ad {

// Readable tensors in test failure messages.
inline void PrintTo(const Tensor& t, std::ostream* os) {
  *os << "tensor " << shape_string(t.shape()) << " {";
  for (std::size_t i = 0; i < t.size(); ++i) *os << (i ? ", " : "") << t[i];
  *os << "}";
}

}  // namespace sthgcn::ad

namespace sthgcn::testing {

using ad::Tape;
using ad::Tensor;
using ad::Var;

inline Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = d(rng);
  return t;
}

/// Erdos-Renyi graph on n nodes with edge probability p.
inline graph::AdjacencyMatrix random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  graph::AdjacencyMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) a.set_edge(i, j);
  return a;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Ascending eigenvalues of a symmetric matrix.
inline std::vector<double> symmetric_eigenvalues(const Tensor& m) {
  const std::size_t n = m.rows();
  Eigen::MatrixXd e(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

/// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradientReport {
  double max_rel = 0.0;
  std::string worst;  // "<leaf>[<element>]"
};

/// Scalar function of a list of leaves, built on a fresh tape.
using ScalarBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Compares reverse-mode gradients of `build` with central differences of
/// step h for every element of every leaf.
inline GradientReport check_gradients(std::vector<Tensor> leaves, const ScalarBuilder& build,
                                      double h = 1e-5) {
  auto evaluate = [&](const std::vector<Tensor>& values) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& v : values) vars.push_back(tape.constant(v));
    return build(tape, vars).value()[0];
  };
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& v : leaves) vars.push_back(tape.parameter(v));
  const ad::Gradients grads = tape.backward(build(tape, vars));

  GradientReport report;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const Tensor& g = grads[vars[l]];
    for (std::size_t i = 0; i < leaves[l].size(); ++i) {
      const double x = leaves[l][i];
      leaves[l][i] = x + h;
      const double up = evaluate(leaves);
      leaves[l][i] = x - h;
      const double down = evaluate(leaves);
      leaves[l][i] = x;
      const double fd = (up - down) / (2.0 * h);
      const double err = relative_error(g[i], fd);
      if (err > report.max_rel) {
        report.max_rel = err;
        report.worst = std::to_string(l) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

/// Dense T_k(L~) for k < order, by the matrix recurrence.
inline std::vector<Tensor> dense_chebyshev_matrices(const Tensor& lt, std::size_t order) {
  const std::size_t n = lt.rows();
  auto mul = [n](const Tensor& a, const Tensor& b) {
    Tensor c({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a(i, k) * b(k, j);
        c(i, j) = s;
      }
    return c;
  };
  std::vector<Tensor> t;
  Tensor eye({n, n});
  for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
  t.push_back(eye);
  if (order > 1) t.push_back(lt);
  for (std::size_t k = 2; k < order; ++k) {
    Tensor next = mul(lt, t[k - 1]);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = 2.0 * next[i] - t[k - 2][i];
    t.push_back(std::move(next));
  }
  return t;
}

/// Explicit polynomial sum_k T_k(L~) X Theta_k, Theta K x C_in x C_out.
inline Tensor dense_cheb_conv(const Tensor& lt, const Tensor& x, const Tensor& theta) {
  const std::size_t k = theta.shape()[0], cin = theta.shape()[1], cout = theta.shape()[2];
  const std::size_t n = lt.rows();
  const auto t = dense_chebyshev_matrices(lt, k);
  Tensor out({n, cout});
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < cout; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t a = 0; a < cin; ++a) s += t[o](i, j) * x(j, a) * theta[(o * cin + a) * cout + c];
        out(i, c) += s;
      }
  return out;
}

/// Silences library warnings for the lifetime of the object.
class QuietWarnings {
 public:
  QuietWarnings() : previous_(set_warning_sink({})) {}
  ~QuietWarnings() { set_warning_sink(previous_); }
  QuietWarnings(const QuietWarnings&) = delete;
  QuietWarnings& operator=(const QuietWarnings&) = delete;

 private:
  WarningSink previous_;
};

}  // namespace sthgcn::testing
