#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sthgcn/ad/ops.hpp"
#include "sthgcn/ad/tape.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/graph_set.hpp"
#include "sthgcn/graph/laplacian.hpp"

namespace sthgcn::model {

using ad::Tape;
using ad::Tensor;
using ad::Var;

/// Chebyshev graph convolution sum_k T_k(L~) X Theta_k.
///
/// x is N x C_in, theta is K x C_in x C_out. Differentiable in both.
inline Var cheb_conv(Tape& tape, const graph::ScaledLaplacian& lt, Var x, Var theta) {
  const auto& ts = theta.shape();
  if (ts.size() != 3) throw DimensionError("cheb_conv: theta must be K x C_in x C_out");
  const std::size_t k = ts[0], cin = ts[1], cout = ts[2];
  if (x.shape().size() != 2 || x.rows() != lt.nodes() || x.cols() != cin)
    throw DimensionError("cheb_conv: signal " + ad::shape_string(x.shape()) + " for " +
                         std::to_string(lt.nodes()) + " nodes and " + std::to_string(cin) +
                         " input channels");
  const Var l = tape.constant(lt.matrix());
  const Var flat = ad::reshape(theta, {k * cin, cout});
  std::vector<Var> terms;
  Var prev2 = x;
  Var prev1 = x;
  for (std::size_t order = 0; order < k; ++order) {
    Var tk;
    if (order == 0) {
      tk = x;
    } else if (order == 1) {
      tk = ad::matmul(l, x);
    } else {
      tk = ad::subtract(ad::scale(ad::matmul(l, prev1), 2.0), prev2);
    }
    terms.push_back(ad::matmul(tk, ad::slice_rows(flat, order * cin, cin)));
    prev2 = prev1;
    prev1 = tk;
  }
  return ad::add_all(terms);
}

/// Z = sum over enabled graphs of ReLU(cheb_conv(L~_g, x, Theta_g)) for one
/// time step x (N x 1).
inline Var hybrid_conv_step(Tape& tape, const graph::GraphSnapshot& graphs, Var x,
                            const std::vector<Var>& thetas) {
  if (graphs.empty()) throw ConfigError("hybrid conv: no graphs enabled");
  if (graphs.size() != thetas.size())
    throw DimensionError("hybrid conv: " + std::to_string(graphs.size()) + " graphs but " +
                         std::to_string(thetas.size()) + " filters");
  std::vector<Var> branches;
  for (std::size_t g = 0; g < graphs.size(); ++g)
    branches.push_back(ad::relu(cheb_conv(tape, *graphs[g], x, thetas[g])));
  return ad::add_all(branches);
}

/// Hybrid convolution from precomputed Chebyshev terms. basis[g] holds one
/// row per (step, sample, node) and one column per order k (C_in = 1).
///
/// Recorded as a single operation. Each entry is summed over k with fused
/// multiply-adds from zero, rectified, and the graphs are added in order,
/// which gives the same bits as the composed matmul / relu / add ops.
inline Var hybrid_conv_basis(const std::vector<Var>& basis, const std::vector<Var>& thetas) {
  if (basis.empty()) throw ConfigError("hybrid conv: no graphs enabled");
  if (basis.size() != thetas.size())
    throw DimensionError("hybrid conv: basis/filter count mismatch");
  const std::size_t rows = basis.front().rows();
  const std::size_t k = basis.front().cols();
  const auto& ts0 = thetas.front().shape();
  if (ts0.size() != 3) throw DimensionError("hybrid conv: theta must be K x 1 x c_h");
  const std::size_t ch = ts0[2];
  std::vector<Var> inputs;
  for (std::size_t g = 0; g < basis.size(); ++g) {
    const auto& ts = thetas[g].shape();
    if (ts.size() != 3 || ts[0] != k || ts[1] != 1 || ts[2] != ch)
      throw DimensionError("hybrid conv: theta " + ad::shape_string(ts) + ", expected " +
                           std::to_string(k) + " x 1 x " + std::to_string(ch));
    if (basis[g].shape().size() != 2 || basis[g].rows() != rows || basis[g].cols() != k)
      throw DimensionError("hybrid conv: basis " + ad::shape_string(basis[g].shape()) +
                           ", expected " + std::to_string(rows) + " x " + std::to_string(k));
    if (basis[g].tape()->requires_grad(basis[g].id()))
      throw ContractError("hybrid conv: basis terms must be constants");
    inputs.push_back(basis[g]);
  }
  const std::size_t graphs = basis.size();
  for (const Var& th : thetas) inputs.push_back(th);

  // Pre-activation of graph g for one row.
  auto pre_row = [k, ch](const double* b, const double* th, double* out) {
    for (std::size_t c = 0; c < ch; ++c) out[c] = 0.0;
    for (std::size_t o = 0; o < k; ++o) {
      const double bv = b[o];
      const double* trow = th + o * ch;
      for (std::size_t c = 0; c < ch; ++c) out[c] = std::fma(bv, trow[c], out[c]);
    }
  };

  return ad::detail::tape_of("hybrid_conv", basis.front()).record(
      "hybrid_conv", inputs,
      [graphs, rows, k, ch, pre_row](const Tape& t, const ad::Node& n) {
        Tensor z({rows, ch});
        std::vector<double> pre(ch);
        for (std::size_t g = 0; g < graphs; ++g) {
          const double* b = t.value(n.inputs[g]).data();
          const double* th = t.value(n.inputs[graphs + g]).data();
          for (std::size_t i = 0; i < rows; ++i) {
            pre_row(b + i * k, th, pre.data());
            double* zr = z.data() + i * ch;
            if (g == 0) {
              for (std::size_t c = 0; c < ch; ++c) zr[c] = pre[c] > 0.0 ? pre[c] : 0.0;
            } else {
              for (std::size_t c = 0; c < ch; ++c) zr[c] += pre[c] > 0.0 ? pre[c] : 0.0;
            }
          }
        }
        return z;
      },
      [graphs, rows, k, ch, pre_row](Tape& t, const ad::Node& n) {
        std::vector<double> pre(ch);
        for (std::size_t g = 0; g < graphs; ++g) {
          const std::size_t tid = n.inputs[graphs + g];
          if (!t.requires_grad(tid)) continue;
          const double* b = t.value(n.inputs[g]).data();
          const double* th = t.value(tid).data();
          double* dth = t.grad_buffer(tid).data();
          for (std::size_t i = 0; i < rows; ++i) {
            pre_row(b + i * k, th, pre.data());
            const double* gr = n.grad.data() + i * ch;
            for (std::size_t c = 0; c < ch; ++c) pre[c] = pre[c] > 0.0 ? gr[c] : 0.0;
            for (std::size_t o = 0; o < k; ++o) {
              const double bv = b[i * k + o];
              if (bv == 0.0) continue;
              double* drow = dth + o * ch;
              for (std::size_t c = 0; c < ch; ++c) drow[c] = std::fma(bv, pre[c], drow[c]);
            }
          }
        }
      });
}

struct GruVars {
  Var w_z, w_r, w_h;
  Var u_z, u_r, u_h;
  Var b_z, b_r, b_h;
};

namespace detail {

// Gate activations kept from the forward pass of one GRU update.
struct GruCache {
  Tensor z, r, cand, rh;
};

inline void add_rows(const Tensor& g, Tensor& row) {
  const std::size_t cols = g.cols();
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < cols; ++j) row[j] += g(i, j);
}

// One GRU update from precomputed input projections xw = x [W_z W_r W_h]
// (rows x 3C), recorded as a single operation:
//   z = sigmoid(xw_z + h U_z + b_z), r = sigmoid(xw_r + h U_r + b_r)
//   cand = tanh(xw_h + (r o h) U_h + b_h), h' = h + z o (cand - h)
inline Var gru_update(const GruVars& p, Var xw, Var h) {
  const std::size_t rows = h.rows(), hid = h.cols();
  if (xw.shape() != ad::Shape{rows, 3 * hid})
    throw DimensionError("gru: input projection " + ad::shape_string(xw.shape()) + " for state " +
                         ad::shape_string(h.shape()));
  for (Var u : {p.u_z, p.u_r, p.u_h})
    if (u.shape() != ad::Shape{hid, hid})
      throw DimensionError("gru: recurrent weight " + ad::shape_string(u.shape()) + " for hidden size " +
                           std::to_string(hid));
  for (Var b : {p.b_z, p.b_r, p.b_h})
    if (b.shape() != ad::Shape{1, hid})
      throw DimensionError("gru: bias " + ad::shape_string(b.shape()) + " for hidden size " +
                           std::to_string(hid));

  auto cache = std::make_shared<GruCache>();
  return ad::detail::tape_of("gru_cell", h).record(
      "gru_cell", {xw, h, p.u_z, p.u_r, p.u_h, p.b_z, p.b_r, p.b_h},
      [cache, rows, hid](const Tape& t, const ad::Node& n) {
        const Tensor& xv = t.value(n.inputs[0]);
        const Tensor& hv = t.value(n.inputs[1]);
        auto gate = [&](std::size_t block, std::size_t u, std::size_t b, const Tensor& src) {
          Tensor a = ad::matmul_values(src, t.value(u));
          const Tensor& bv = t.value(b);
          for (std::size_t i = 0; i < rows; ++i) {
            const double* x = xv.data() + i * 3 * hid + block * hid;
            for (std::size_t j = 0; j < hid; ++j) {
              double& v = a(i, j);
              v = x[j] + v;
              v += bv[j];
            }
          }
          return a;
        };
        Tensor z = gate(0, n.inputs[2], n.inputs[5], hv);
        for (double& v : z.values()) v = ad::detail::stable_sigmoid(v);
        Tensor r = gate(1, n.inputs[3], n.inputs[6], hv);
        for (double& v : r.values()) v = ad::detail::stable_sigmoid(v);
        Tensor rh = r;
        for (std::size_t i = 0; i < rh.size(); ++i) rh[i] *= hv[i];
        Tensor cand = gate(2, n.inputs[4], n.inputs[7], rh);
        for (double& v : cand.values()) v = ad::detail::tanh_value(v);
        Tensor out = hv;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += z[i] * (cand[i] - hv[i]);
        *cache = {std::move(z), std::move(r), std::move(cand), std::move(rh)};
        return out;
      },
      [cache, rows, hid](Tape& t, const ad::Node& n) {
        const Tensor& g = n.grad;
        const Tensor& hv = t.value(n.inputs[1]);
        const Tensor& z = cache->z;
        const Tensor& r = cache->r;
        const Tensor& cand = cache->cand;
        const std::size_t size = rows * hid;

        Tensor daz({rows, hid}), dac({rows, hid}), dh({rows, hid});
        for (std::size_t i = 0; i < size; ++i) {
          daz[i] = g[i] * (cand[i] - hv[i]) * (z[i] * (1.0 - z[i]));
          dac[i] = g[i] * z[i] * (1.0 - cand[i] * cand[i]);
          dh[i] = g[i] - g[i] * z[i];
        }
        auto transposed = [&](std::size_t id) {
          const Tensor& u = t.value(id);
          Tensor ut({hid, hid});
          ad::kernels::transpose(u.data(), ut.data(), hid, hid);
          return ut;
        };
        // Through the candidate: d(r o h) = dac U_h^T.
        const Tensor drh = ad::matmul_values(dac, transposed(n.inputs[4]));
        Tensor dar({rows, hid});
        for (std::size_t i = 0; i < size; ++i) {
          dar[i] = drh[i] * hv[i] * (r[i] * (1.0 - r[i]));
          dh[i] += drh[i] * r[i];
        }
        const Tensor dhz = ad::matmul_values(daz, transposed(n.inputs[2]));
        const Tensor dhr = ad::matmul_values(dar, transposed(n.inputs[3]));
        for (std::size_t i = 0; i < size; ++i) dh[i] += dhz[i] + dhr[i];

        auto weight = [&](std::size_t id, const Tensor& src, const Tensor& d) {
          if (t.requires_grad(id))
            ad::kernels::matmul_tn_accumulate(src.data(), d.data(), t.grad_buffer(id).data(), rows, hid,
                                              hid);
        };
        weight(n.inputs[2], hv, daz);
        weight(n.inputs[3], hv, dar);
        weight(n.inputs[4], cache->rh, dac);
        if (t.requires_grad(n.inputs[5])) add_rows(daz, t.grad_buffer(n.inputs[5]));
        if (t.requires_grad(n.inputs[6])) add_rows(dar, t.grad_buffer(n.inputs[6]));
        if (t.requires_grad(n.inputs[7])) add_rows(dac, t.grad_buffer(n.inputs[7]));
        t.accumulate(n.inputs[1], std::move(dh));
        if (t.requires_grad(n.inputs[0])) {
          Tensor& dx = t.grad_buffer(n.inputs[0]);
          for (std::size_t i = 0; i < rows; ++i) {
            double* d = dx.data() + i * 3 * hid;
            for (std::size_t j = 0; j < hid; ++j) {
              d[j] += daz(i, j);
              d[hid + j] += dar(i, j);
              d[2 * hid + j] += dac(i, j);
            }
          }
        }
      });
}

inline Var zero_state(Tape& tape, std::size_t rows, std::size_t hidden) {
  return tape.constant(ad::Tensor({rows, hidden}));
}

}  // namespace detail

namespace detail {

// [W_z W_r W_h], c_h x 3C.
inline Var input_weights(const GruVars& p) {
  return ad::concat_cols(p.w_z, ad::concat_cols(p.w_r, p.w_h));
}

}  // namespace detail

/// Runs the shared GRU over a sequence of R x c_h inputs (one row per node)
/// and returns the last hidden state, R x C. h0 defaults to zero.
inline Var gru_sequence(Tape& tape, const std::vector<Var>& inputs, const GruVars& p,
                        std::optional<Var> h0 = std::nullopt) {
  if (inputs.empty()) throw ContractError("gru: empty sequence");
  const std::size_t rows = inputs.front().rows();
  const std::size_t hidden = p.u_z.rows();
  const Var w = detail::input_weights(p);
  Var h = h0 ? *h0 : detail::zero_state(tape, rows, hidden);
  for (const Var& x : inputs) h = detail::gru_update(p, ad::matmul(x, w), h);
  return h;
}

/// Same as above with the steps stacked along rows (steps * R x c_h). The
/// input projections of all steps are computed in one product.
inline Var gru_sequence_stacked(Tape& tape, Var stacked, std::size_t steps, const GruVars& p,
                                std::optional<Var> h0 = std::nullopt) {
  if (steps == 0) throw ContractError("gru: empty sequence");
  if (stacked.rows() % steps != 0)
    throw DimensionError("gru: " + std::to_string(stacked.rows()) + " rows for " +
                         std::to_string(steps) + " steps");
  const std::size_t rows = stacked.rows() / steps;
  const std::size_t hidden = p.u_z.rows();
  const Var xw = ad::matmul(stacked, detail::input_weights(p));
  Var h = h0 ? *h0 : detail::zero_state(tape, rows, hidden);
  for (std::size_t s = 0; s < steps; ++s) h = detail::gru_update(p, ad::slice_rows(xw, s * rows, rows), h);
  return h;
}

/// [Y, F] W_f + b_f, with b_f already tiled to one entry per row.
inline Var output_head(Var y, Var features, Var w_f, Var b_f_rows) {
  return ad::add(ad::matmul(ad::concat_cols(y, features), w_f), b_f_rows);
}

}  // namespace sthgcn::model
