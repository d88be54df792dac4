#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sthgcn/ad/tape.hpp"
#include "sthgcn/data/dataset.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/model/inputs.hpp"
#include "sthgcn/model/sthgcn.hpp"
#include "sthgcn/train/loss.hpp"
#include "sthgcn/train/rmsprop.hpp"

namespace sthgcn::train {

struct TrainConfig {
  double alpha = 1e-4;
  double lr0 = 1e-3;
  double decay = 0.7;
  std::size_t decay_every = 5;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  RmsPropConfig rmsprop;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("train: alpha must be >= 0");
    if (!(lr0 > 0.0)) throw ConfigError("train: lr0 must be positive");
    if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("train: decay must be in (0, 1)");
    if (decay_every == 0) throw ConfigError("train: decay_every must be positive");
    if (epochs == 0) throw ConfigError("train: epochs must be positive");
    if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
    if (!(rmsprop.rho > 0.0 && rmsprop.rho < 1.0)) throw ConfigError("train: rmsprop rho must be in (0, 1)");
    if (!(rmsprop.eps > 0.0)) throw ConfigError("train: rmsprop eps must be positive");
    if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be >= 0");
  }
};

/// lr0 * decay^floor(epoch / decay_every)
inline double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(epoch / cfg.decay_every));
}

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_rmse = 0.0;
  double lr = 0.0;
};

struct FitResult {
  model::ModelParams best;   // parameters with the lowest validation RMSE
  model::ModelParams last;   // parameters after the final epoch
  std::size_t best_epoch = 0;
  double best_val_rmse = std::numeric_limits<double>::infinity();
  std::vector<EpochLog> log;
};

/// Raw-unit predictions and targets for a sample list, N values per sample
/// in sample order.
struct Predictions {
  std::vector<data::Sample> samples;
  std::vector<double> predicted;
  std::vector<double> actual;
};

inline Predictions predict_samples(const model::InputAssembler& assembler,
                                   const model::ModelParams& params,
                                   std::span<const data::Sample> samples,
                                   std::size_t batch_size = 64) {
  if (samples.empty()) throw EmptyDatasetError("predict: no samples");
  const data::Dataset& ds = assembler.dataset();
  const std::size_t n = ds.stations();
  Predictions out;
  out.samples.assign(samples.begin(), samples.end());
  out.predicted.reserve(samples.size() * n);
  out.actual.reserve(samples.size() * n);
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const auto batch = samples.subspan(begin, std::min(batch_size, samples.size() - begin));
    const ad::Tensor pred = model::predict(params, assembler.assemble(batch));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const ad::Tensor truth = ds.target_raw(batch[b]);
      for (std::size_t i = 0; i < n; ++i) {
        out.predicted.push_back(ds.scaler().invert(pred[b * n + i], i));
        out.actual.push_back(truth[i]);
      }
    }
  }
  return out;
}

/// RMSE / MAE in raw units.
inline Metrics evaluate(const model::InputAssembler& assembler, const model::ModelParams& params,
                        std::span<const data::Sample> samples) {
  const Predictions p = predict_samples(assembler, params, samples);
  return metrics(p.predicted, p.actual);
}

namespace detail {

inline double global_norm(const std::vector<ad::Tensor>& grads) {
  double s = 0.0;
  for (const auto& g : grads)
    for (double v : g.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

using EpochCallback = std::function<void(const EpochLog&)>;

/// Minibatch RMSProp on the mean loss with seeded shuffling and
/// best-validation selection. Deterministic for a fixed configuration.
inline FitResult fit(const model::InputAssembler& assembler, model::ModelParams params,
                     std::vector<data::Sample> train_set, const std::vector<data::Sample>& val_set,
                     const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train_set.empty()) throw EmptyDatasetError("fit: empty training set");
  if (val_set.empty()) throw EmptyDatasetError("fit: empty validation set");

  auto named = params.named();
  std::vector<ad::Tensor> state;
  for (const auto& [name, t] : named) state.emplace_back(t->shape());

  std::mt19937_64 rng(cfg.seed);
  FitResult result;
  std::size_t batch_index = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    std::shuffle(train_set.begin(), train_set.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < train_set.size(); begin += cfg.batch_size, ++batch_index) {
      const std::span<const data::Sample> batch(train_set.data() + begin,
                                                std::min(cfg.batch_size, train_set.size() - begin));
      const model::BatchInput in = assembler.assemble(batch);
      ad::Tape tape;
      const model::BoundParams bound = model::bind(tape, params);
      const ad::Var pred = model::forward(tape, bound, in);
      const ad::Var l = loss(pred, tape.constant(in.targets), cfg.alpha);
      const double lv = l.value()[0];
      if (!std::isfinite(lv))
        throw NumericalError("fit: non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      loss_sum += lv * static_cast<double>(batch.size());

      const ad::Gradients grads = tape.backward(l);
      const std::vector<ad::Var> vars = bound.list();
      std::vector<ad::Tensor> g;
      g.reserve(vars.size());
      for (const ad::Var& v : vars) g.push_back(grads[v]);
      const double norm = detail::global_norm(g);
      if (!std::isfinite(norm))
        throw NumericalError("fit: non-finite gradient in epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      if (cfg.clip_norm > 0.0) {
        if (norm > cfg.clip_norm) {
          const double s = cfg.clip_norm / norm;
          for (auto& t : g)
            for (double& v : t.values()) v *= s;
        }
      }
      for (std::size_t k = 0; k < named.size(); ++k)
        rmsprop_step(*named[k].second, g[k], state[k], lr, cfg.rmsprop, named[k].first);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    entry.val_rmse = evaluate(assembler, params, val_set).rmse;
    entry.lr = lr;
    result.log.push_back(entry);
    if (entry.val_rmse < result.best_val_rmse) {
      result.best_val_rmse = entry.val_rmse;
      result.best_epoch = epoch;
      result.best = params;
    }
    if (on_epoch) on_epoch(entry);
  }
  if (result.best.theta.empty()) result.best = params;  // validation RMSE was never finite
  result.last = std::move(params);
  return result;
}

}  // namespace sthgcn::train
