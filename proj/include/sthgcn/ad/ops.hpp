#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sthgcn/ad/kernels.hpp"
#include "sthgcn/ad/tape.hpp"
#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/error.hpp"

// Differentiable primitives. Each op records its forward rule and its
// gradient rule on the tape of its inputs.

namespace sthgcn::ad {

namespace detail {

inline const Tensor& in(const Tape& t, const Node& n, std::size_t k) {
  return t.value(n.inputs[k]);
}

inline void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

inline void require_rank2(const char* op, const Var& a) {
  if (a.shape().size() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
}

inline Tape& tape_of(const char* op, const Var& v) {
  if (!v.valid()) throw MissingTapeError(std::string(op) + ": input is not attached to a tape");
  return *v.tape();
}

// Branch-free exponential, within a few ulp of std::exp. Written so that
// loops over it vectorize: x = n ln2 + r with |r| <= ln2 / 2, a degree-13
// Taylor polynomial for e^r, and 2^n applied in two halves so that
// results near the subnormal range do not overflow the exponent field.
inline double exp_value(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kRound = 6755399441055744.0;  // 1.5 * 2^52
  const bool nan = x != x;
  double xc = x < -746.0 ? -746.0 : x;
  xc = xc > 710.0 ? 710.0 : xc;
  xc = nan ? 0.0 : xc;
  const double n = (xc * kLog2e + kRound) - kRound;
  const double r = std::fma(-n, kLn2Lo, std::fma(-n, kLn2Hi, xc));
  double p = 1.0 / 6227020800.0;
  p = std::fma(p, r, 1.0 / 479001600.0);
  p = std::fma(p, r, 1.0 / 39916800.0);
  p = std::fma(p, r, 1.0 / 3628800.0);
  p = std::fma(p, r, 1.0 / 362880.0);
  p = std::fma(p, r, 1.0 / 40320.0);
  p = std::fma(p, r, 1.0 / 5040.0);
  p = std::fma(p, r, 1.0 / 720.0);
  p = std::fma(p, r, 1.0 / 120.0);
  p = std::fma(p, r, 1.0 / 24.0);
  p = std::fma(p, r, 1.0 / 6.0);
  p = std::fma(p, r, 0.5);
  p = std::fma(p, r, 1.0);
  p = std::fma(p, r, 1.0);
  const auto ni = static_cast<std::int64_t>(n);
  const std::int64_t n1 = ni / 2, n2 = ni - n1;
  const double s1 = std::bit_cast<double>(static_cast<std::uint64_t>(n1 + 1023) << 52);
  const double s2 = std::bit_cast<double>(static_cast<std::uint64_t>(n2 + 1023) << 52);
  const double out = p * s1 * s2;
  return nan ? x : out;
}

// e^y - 1 without cancellation near zero.
inline double expm1_value(double y) {
  double p = 1.0 / 87178291200.0;
  p = std::fma(p, y, 1.0 / 6227020800.0);
  p = std::fma(p, y, 1.0 / 479001600.0);
  p = std::fma(p, y, 1.0 / 39916800.0);
  p = std::fma(p, y, 1.0 / 3628800.0);
  p = std::fma(p, y, 1.0 / 362880.0);
  p = std::fma(p, y, 1.0 / 40320.0);
  p = std::fma(p, y, 1.0 / 5040.0);
  p = std::fma(p, y, 1.0 / 720.0);
  p = std::fma(p, y, 1.0 / 120.0);
  p = std::fma(p, y, 1.0 / 24.0);
  p = std::fma(p, y, 1.0 / 6.0);
  p = std::fma(p, y, 0.5);
  p = std::fma(p, y, 1.0);
  const double small = y * p;
  const double large = exp_value(y) - 1.0;
  return std::abs(y) < 0.35 ? small : large;
}

// 1 / (1 + e^-x) for x >= 0 and e^x / (1 + e^x) otherwise, so the
// exponential never overflows.
inline double stable_sigmoid(double x) {
  const double e = exp_value(-std::abs(x));
  const double d = 1.0 + e;
  return x >= 0.0 ? 1.0 / d : e / d;
}

// tanh |x| = -m / (2 + m) with m = e^{-2|x|} - 1.
inline double tanh_value(double x) {
  const double m = expm1_value(-2.0 * std::abs(x));
  return std::copysign(-m / (2.0 + m), x);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

inline Tensor matmul_values(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  Tensor c({a.rows(), b.cols()});
  kernels::matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

inline Var matmul(Var a, Var b) {
  detail::require_rank2("matmul", a);
  detail::require_rank2("matmul", b);
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  return detail::tape_of("matmul", a).record(
      "matmul", {a, b},
      [](const Tape& t, const Node& n) {
        return matmul_values(detail::in(t, n, 0), detail::in(t, n, 1));
      },
      [](Tape& t, const Node& n) {
        const Tensor& av = t.value(n.inputs[0]);
        const Tensor& bv = t.value(n.inputs[1]);
        const std::size_t m = av.rows(), k = av.cols(), cols = bv.cols();
        if (t.requires_grad(n.inputs[0])) {
          Tensor bt({cols, k});
          kernels::transpose(bv.data(), bt.data(), k, cols);
          Tensor da({m, k});
          kernels::matmul(n.grad.data(), bt.data(), da.data(), m, cols, k);
          t.accumulate(n.inputs[0], std::move(da));
        }
        if (t.requires_grad(n.inputs[1])) {
          Tensor& db = t.grad_buffer(n.inputs[1]);
          kernels::matmul_tn_accumulate(av.data(), n.grad.data(), db.data(), m, k, cols);
        }
      });
}

// ---------------------------------------------------------------------------
// Pointwise

enum class Pointwise { relu, sigmoid, tanh, abs, square };

inline const char* pointwise_name(Pointwise op) {
  switch (op) {
    case Pointwise::relu: return "relu";
    case Pointwise::sigmoid: return "sigmoid";
    case Pointwise::tanh: return "tanh";
    case Pointwise::abs: return "abs";
    case Pointwise::square: return "square";
  }
  return "pointwise";
}

inline double pointwise_value(Pointwise op, double x) {
  switch (op) {
    case Pointwise::relu: return x > 0.0 ? x : 0.0;
    case Pointwise::sigmoid: return detail::stable_sigmoid(x);
    case Pointwise::tanh: return detail::tanh_value(x);
    case Pointwise::abs: return std::abs(x);
    case Pointwise::square: return x * x;
  }
  return x;
}

// Derivative given input x and output y. relu'(0) and abs'(0) are 0.
inline double pointwise_derivative(Pointwise op, double x, double y) {
  switch (op) {
    case Pointwise::relu: return x > 0.0 ? 1.0 : 0.0;
    case Pointwise::sigmoid: return y * (1.0 - y);
    case Pointwise::tanh: return 1.0 - y * y;
    case Pointwise::abs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Pointwise::square: return 2.0 * x;
  }
  return 0.0;
}

inline Var pointwise(Pointwise op, Var x) {
  return detail::tape_of(pointwise_name(op), x)
      .record(
          pointwise_name(op), {x},
          [op](const Tape& t, const Node& n) {
            Tensor out = detail::in(t, n, 0);
            for (double& v : out.values()) v = pointwise_value(op, v);
            return out;
          },
          [op](Tape& t, const Node& n) {
            const Tensor& xv = t.value(n.inputs[0]);
            Tensor& dx = t.grad_buffer(n.inputs[0]);
            for (std::size_t i = 0; i < xv.size(); ++i)
              dx[i] += n.grad[i] * pointwise_derivative(op, xv[i], n.value[i]);
          });
}

inline Var relu(Var x) { return pointwise(Pointwise::relu, x); }
inline Var sigmoid(Var x) { return pointwise(Pointwise::sigmoid, x); }
inline Var tanh(Var x) { return pointwise(Pointwise::tanh, x); }
inline Var abs(Var x) { return pointwise(Pointwise::abs, x); }
inline Var square(Var x) { return pointwise(Pointwise::square, x); }

// ---------------------------------------------------------------------------
// Combinations

inline Var add(Var a, Var b) {
  detail::require_same_shape("add", a, b);
  return detail::tape_of("add", a).record(
      "add", {a, b},
      [](const Tape& t, const Node& n) {
        Tensor out = detail::in(t, n, 0);
        const Tensor& bv = detail::in(t, n, 1);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
        return out;
      },
      [](Tape& t, const Node& n) {
        t.accumulate(n.inputs[0], n.grad);
        t.accumulate(n.inputs[1], n.grad);
      });
}

inline Var subtract(Var a, Var b) {
  detail::require_same_shape("subtract", a, b);
  return detail::tape_of("subtract", a).record(
      "subtract", {a, b},
      [](const Tape& t, const Node& n) {
        Tensor out = detail::in(t, n, 0);
        const Tensor& bv = detail::in(t, n, 1);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
        return out;
      },
      [](Tape& t, const Node& n) {
        t.accumulate(n.inputs[0], n.grad);
        if (t.requires_grad(n.inputs[1])) {
          Tensor& db = t.grad_buffer(n.inputs[1]);
          for (std::size_t i = 0; i < db.size(); ++i) db[i] -= n.grad[i];
        }
      });
}

inline Var hadamard(Var a, Var b) {
  detail::require_same_shape("hadamard", a, b);
  return detail::tape_of("hadamard", a).record(
      "hadamard", {a, b},
      [](const Tape& t, const Node& n) {
        Tensor out = detail::in(t, n, 0);
        const Tensor& bv = detail::in(t, n, 1);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
        return out;
      },
      [](Tape& t, const Node& n) {
        const Tensor& av = t.value(n.inputs[0]);
        const Tensor& bv = t.value(n.inputs[1]);
        if (t.requires_grad(n.inputs[0])) {
          Tensor& da = t.grad_buffer(n.inputs[0]);
          for (std::size_t i = 0; i < da.size(); ++i) da[i] += n.grad[i] * bv[i];
        }
        if (t.requires_grad(n.inputs[1])) {
          Tensor& db = t.grad_buffer(n.inputs[1]);
          for (std::size_t i = 0; i < db.size(); ++i) db[i] += n.grad[i] * av[i];
        }
      });
}

inline Var scale(Var x, double s) {
  return detail::tape_of("scale", x).record(
      "scale", {x},
      [s](const Tape& t, const Node& n) {
        Tensor out = detail::in(t, n, 0);
        for (double& v : out.values()) v *= s;
        return out;
      },
      [s](Tape& t, const Node& n) {
        Tensor& dx = t.grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += s * n.grad[i];
      });
}

/// x[m x n] + row[1 x n], the row repeated over every row of x.
inline Var add_row(Var x, Var row) {
  detail::require_rank2("add_row", x);
  detail::require_rank2("add_row", row);
  if (row.rows() != 1 || row.cols() != x.cols())
    throw DimensionError("add_row: " + shape_string(x.shape()) + " + " +
                         shape_string(row.shape()));
  return detail::tape_of("add_row", x).record(
      "add_row", {x, row},
      [](const Tape& t, const Node& n) {
        Tensor out = detail::in(t, n, 0);
        const Tensor& r = detail::in(t, n, 1);
        const std::size_t cols = out.cols();
        for (std::size_t i = 0; i < out.rows(); ++i)
          for (std::size_t j = 0; j < cols; ++j) out(i, j) += r[j];
        return out;
      },
      [](Tape& t, const Node& n) {
        t.accumulate(n.inputs[0], n.grad);
        if (t.requires_grad(n.inputs[1])) {
          Tensor& dr = t.grad_buffer(n.inputs[1]);
          const std::size_t cols = n.grad.cols();
          for (std::size_t i = 0; i < n.grad.rows(); ++i)
            for (std::size_t j = 0; j < cols; ++j) dr[j] += n.grad(i, j);
        }
      });
}

inline Var reduce_sum(Var x) {
  return detail::tape_of("reduce_sum", x).record(
      "reduce_sum", {x},
      [](const Tape& t, const Node& n) {
        double s = 0.0;
        for (double v : detail::in(t, n, 0).values()) s += v;
        return Tensor::scalar(s);
      },
      [](Tape& t, const Node& n) {
        Tensor& dx = t.grad_buffer(n.inputs[0]);
        const double g = n.grad[0];
        for (double& v : dx.values()) v += g;
      });
}

inline Var reduce_mean(Var x) {
  return detail::tape_of("reduce_mean", x).record(
      "reduce_mean", {x},
      [](const Tape& t, const Node& n) {
        const Tensor& xv = detail::in(t, n, 0);
        double s = 0.0;
        for (double v : xv.values()) s += v;
        return Tensor::scalar(s / static_cast<double>(xv.size()));
      },
      [](Tape& t, const Node& n) {
        Tensor& dx = t.grad_buffer(n.inputs[0]);
        const double g = n.grad[0] / static_cast<double>(dx.size());
        for (double& v : dx.values()) v += g;
      });
}

/// [a | b] for a[m x p], b[m x q].
inline Var concat_cols(Var a, Var b) {
  detail::require_rank2("concat_cols", a);
  detail::require_rank2("concat_cols", b);
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols: " + shape_string(a.shape()) + " | " +
                         shape_string(b.shape()));
  return detail::tape_of("concat_cols", a).record(
      "concat_cols", {a, b},
      [](const Tape& t, const Node& n) {
        const Tensor& av = detail::in(t, n, 0);
        const Tensor& bv = detail::in(t, n, 1);
        const std::size_t p = av.cols(), q = bv.cols();
        Tensor out({av.rows(), p + q});
        for (std::size_t i = 0; i < av.rows(); ++i) {
          for (std::size_t j = 0; j < p; ++j) out(i, j) = av(i, j);
          for (std::size_t j = 0; j < q; ++j) out(i, p + j) = bv(i, j);
        }
        return out;
      },
      [](Tape& t, const Node& n) {
        const std::size_t p = t.value(n.inputs[0]).cols();
        const std::size_t q = t.value(n.inputs[1]).cols();
        if (t.requires_grad(n.inputs[0])) {
          Tensor& da = t.grad_buffer(n.inputs[0]);
          for (std::size_t i = 0; i < da.rows(); ++i)
            for (std::size_t j = 0; j < p; ++j) da(i, j) += n.grad(i, j);
        }
        if (t.requires_grad(n.inputs[1])) {
          Tensor& db = t.grad_buffer(n.inputs[1]);
          for (std::size_t i = 0; i < db.rows(); ++i)
            for (std::size_t j = 0; j < q; ++j) db(i, j) += n.grad(i, p + j);
        }
      });
}

/// Rows [begin, begin + count) of x.
inline Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  detail::require_rank2("slice_rows", x);
  if (count == 0 || begin + count > x.rows())
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") of " + shape_string(x.shape()));
  return detail::tape_of("slice_rows", x).record(
      "slice_rows", {x},
      [begin, count](const Tape& t, const Node& n) {
        const Tensor& xv = detail::in(t, n, 0);
        const std::size_t cols = xv.cols();
        std::vector<double> v(xv.data() + begin * cols, xv.data() + (begin + count) * cols);
        return Tensor({count, cols}, std::move(v));
      },
      [begin](Tape& t, const Node& n) {
        Tensor& dx = t.grad_buffer(n.inputs[0]);
        double* dst = dx.data() + begin * dx.cols();
        for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
      });
}

/// x stacked `times` times along rows.
inline Var tile_rows(Var x, std::size_t times) {
  detail::require_rank2("tile_rows", x);
  if (times == 0) throw DimensionError("tile_rows: zero repetitions");
  return detail::tape_of("tile_rows", x).record(
      "tile_rows", {x},
      [times](const Tape& t, const Node& n) {
        const Tensor& xv = detail::in(t, n, 0);
        Tensor out({xv.rows() * times, xv.cols()});
        for (std::size_t r = 0; r < times; ++r)
          std::copy(xv.values().begin(), xv.values().end(), out.data() + r * xv.size());
        return out;
      },
      [times](Tape& t, const Node& n) {
        Tensor& dx = t.grad_buffer(n.inputs[0]);
        for (std::size_t r = 0; r < times; ++r)
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += n.grad[r * dx.size() + i];
      });
}

inline Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.value().size())
    throw DimensionError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  return detail::tape_of("reshape", x).record(
      "reshape", {x},
      [shape](const Tape& t, const Node& n) { return detail::in(t, n, 0).reshaped(shape); },
      [](Tape& t, const Node& n) {
        Tensor& dx = t.grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += n.grad[i];
      });
}

/// Sum of a non-empty list of same-shaped variables, left to right.
inline Var add_all(const std::vector<Var>& terms) {
  if (terms.empty()) throw ContractError("add_all: no terms");
  Var acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

}  // namespace sthgcn::ad
