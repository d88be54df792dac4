#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sthgcn/ad/ops.hpp"
#include "sthgcn/ad/tape.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/graph_set.hpp"
#include "sthgcn/model/inputs.hpp"
#include "sthgcn/model/layers.hpp"
#include "sthgcn/model/params.hpp"

namespace sthgcn::model {

/// ModelParams recorded on a tape, either as trainable leaves or as
/// constants.
struct BoundParams {
  std::vector<Var> theta;
  GruVars gru;
  Var w_f;
  Var b_f;

  /// Vars in ModelParams::named() order.
  std::vector<Var> list() const {
    std::vector<Var> out(theta.begin(), theta.end());
    for (Var v : {gru.w_z, gru.w_r, gru.w_h, gru.u_z, gru.u_r, gru.u_h, gru.b_z, gru.b_r, gru.b_h, w_f, b_f})
      out.push_back(v);
    return out;
  }
};

inline BoundParams bind(Tape& tape, const ModelParams& p, bool trainable = true) {
  auto leaf = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  BoundParams b;
  for (const Tensor& th : p.theta) b.theta.push_back(leaf(th));
  b.gru = {leaf(p.w_z), leaf(p.w_r), leaf(p.w_h), leaf(p.u_z), leaf(p.u_r),
           leaf(p.u_h), leaf(p.b_z), leaf(p.b_r), leaf(p.b_h)};
  b.w_f = leaf(p.w_f);
  b.b_f = leaf(p.b_f);
  return b;
}

/// Batched forward pass: (B * N) x 1 predictions in normalized units, row
/// b * N + i for node i of sample b.
inline Var forward(Tape& tape, const BoundParams& p, const BatchInput& in) {
  if (in.basis.size() != p.theta.size())
    throw DimensionError("forward: input carries " + std::to_string(in.basis.size()) +
                         " graphs, model expects " + std::to_string(p.theta.size()));
  if (p.b_f.rows() != in.nodes)
    throw DimensionError("forward: model has " + std::to_string(p.b_f.rows()) +
                         " nodes, input has " + std::to_string(in.nodes));
  std::vector<Var> basis;
  for (const Tensor& b : in.basis) basis.push_back(tape.constant(b));
  const Var z = hybrid_conv_basis(basis, p.theta);
  const Var y = gru_sequence_stacked(tape, z, in.steps, p.gru);
  const Var f = tape.constant(in.features);
  const Var bias = in.batch == 1 ? p.b_f : ad::tile_rows(p.b_f, in.batch);
  return output_head(y, f, p.w_f, bias);
}

/// Single-sample forward pass that convolves each of the T columns of x
/// (N x T) on the given graphs. x may itself be a tape variable.
inline Var forward_steps(Tape& tape, const BoundParams& p, const graph::GraphSnapshot& graphs, Var x,
                         Var features) {
  std::vector<Var> seq;
  // Column s of x as an N x 1 signal: x * e_s with a constant selector.
  for (std::size_t s = 0; s < x.cols(); ++s) {
    Tensor sel({x.cols(), 1});
    sel[s] = 1.0;
    const Var xs = ad::matmul(x, tape.constant(sel));
    seq.push_back(hybrid_conv_step(tape, graphs, xs, p.theta));
  }
  const Var y = gru_sequence(tape, seq, p.gru);
  return output_head(y, features, p.w_f, p.b_f);
}

/// Predictions without gradient bookkeeping.
inline Tensor predict(const ModelParams& params, const BatchInput& in) {
  Tape tape;
  const BoundParams p = bind(tape, params, false);
  return forward(tape, p, in).value();
}

/// Parameters together with the configuration they were built for.
struct SthgcnModel {
  ModelConfig config;
  ModelParams params;

  static SthgcnModel create(const ModelConfig& cfg, std::uint64_t seed) {
    return {cfg, init_params(cfg, seed)};
  }

  Tensor predict(const BatchInput& in) const { return model::predict(params, in); }
};

}  // namespace sthgcn::model
