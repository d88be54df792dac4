#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/dataset.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/graph_set.hpp"

namespace sthgcn::model {

using ad::Shape;
using ad::Tensor;

struct ModelConfig {
  std::size_t nodes = 0;
  std::size_t cheb_order = 3;      // K
  std::size_t conv_channels = 64;  // c_h
  std::size_t hidden = 32;         // C
  std::size_t features = data::kCalendarFeatures;
  graph::GraphSelection graphs;

  void validate() const {
    if (nodes == 0) throw ConfigError("model: node count must be positive");
    if (cheb_order == 0) throw ConfigError("model: cheb_order (K) must be >= 1");
    if (conv_channels == 0) throw ConfigError("model: conv_channels must be >= 1");
    if (hidden == 0) throw ConfigError("model: hidden must be >= 1");
    if (graphs.count() == 0) throw ConfigError("model: at least one graph must be enabled");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Learnable tensors. Gate weights act on row vectors: x W + h U + b.
struct ModelParams {
  std::vector<Tensor> theta;  // one K x 1 x c_h stack per enabled graph
  Tensor w_z, w_r, w_h;       // c_h x C
  Tensor u_z, u_r, u_h;       // C x C
  Tensor b_z, b_r, b_h;       // 1 x C
  Tensor w_f;                 // (C + |F|) x 1
  Tensor b_f;                 // N x 1

  /// Every tensor with a stable name, in a fixed order.
  std::vector<std::pair<std::string, Tensor*>> named() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t g = 0; g < theta.size(); ++g)
      out.emplace_back("theta." + std::to_string(g), &theta[g]);
    out.emplace_back("gru.w_z", &w_z);
    out.emplace_back("gru.w_r", &w_r);
    out.emplace_back("gru.w_h", &w_h);
    out.emplace_back("gru.u_z", &u_z);
    out.emplace_back("gru.u_r", &u_r);
    out.emplace_back("gru.u_h", &u_h);
    out.emplace_back("gru.b_z", &b_z);
    out.emplace_back("gru.b_r", &b_r);
    out.emplace_back("gru.b_h", &b_h);
    out.emplace_back("head.w_f", &w_f);
    out.emplace_back("head.b_f", &b_f);
    return out;
  }

  std::vector<std::pair<std::string, const Tensor*>> named() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (auto& [name, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, t);
    return out;
  }

  bool all_finite() const {
    for (const auto& [name, t] : named())
      if (!t->all_finite()) return false;
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named()) n += t->size();
    return n;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Glorot bound sqrt(6 / (fan_in + fan_out)). For a K x C_in x C_out stack
/// fan_in is K * C_in.
inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

/// Glorot-uniform weights, zero biases; a pure function of the seed.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](Shape shape, std::size_t fan_in, std::size_t fan_out) {
    const double b = glorot_bound(fan_in, fan_out);
    std::uniform_real_distribution<double> dist(-b, b);
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = dist(rng);
    return t;
  };
  const std::size_t k = cfg.cheb_order, ch = cfg.conv_channels, c = cfg.hidden;
  ModelParams p;
  for (std::size_t g = 0; g < cfg.graphs.count(); ++g) p.theta.push_back(uniform({k, 1, ch}, k, ch));
  p.w_z = uniform({ch, c}, ch, c);
  p.w_r = uniform({ch, c}, ch, c);
  p.w_h = uniform({ch, c}, ch, c);
  p.u_z = uniform({c, c}, c, c);
  p.u_r = uniform({c, c}, c, c);
  p.u_h = uniform({c, c}, c, c);
  p.b_z = Tensor({1, c});
  p.b_r = Tensor({1, c});
  p.b_h = Tensor({1, c});
  p.w_f = uniform({c + cfg.features, 1}, c + cfg.features, 1);
  p.b_f = Tensor({cfg.nodes, 1});
  return p;
}

}  // namespace sthgcn::model
