#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "sthgcn/ad/ops.hpp"
#include "sthgcn/error.hpp"

namespace sthgcn::train {

/// mean((pred - target)^2) + alpha * mean(|pred - target|).
///
/// With B samples stacked as B * N rows this equals the mean over samples
/// of the per-sample loss.
inline ad::Var loss(ad::Var pred, ad::Var target, double alpha) {
  const ad::Var d = ad::subtract(pred, target);
  return ad::add(ad::reduce_mean(ad::square(d)), ad::scale(ad::reduce_mean(ad::abs(d)), alpha));
}

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
};

/// RMSE and MAE over paired entries.
inline Metrics metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw DimensionError("metrics: prediction/truth length mismatch");
  if (pred.empty()) throw InputError("metrics: no predictions");
  double sq = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    sq += e * e;
    ab += std::abs(e);
  }
  const double n = static_cast<double>(pred.size());
  return {std::sqrt(sq / n), ab / n};
}

}  // namespace sthgcn::train
