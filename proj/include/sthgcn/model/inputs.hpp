#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/data/dataset.hpp"
#include "sthgcn/data/slicing.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/graph_set.hpp"
#include "sthgcn/graph/laplacian.hpp"

namespace sthgcn::model {

/// Model input for a batch of B samples over N nodes and T steps.
///
/// basis[g] is (T * B * N) x K: row (s * B + b) * N + i holds
/// [T_0(L~_g) x, ..., T_{K-1}(L~_g) x] at node i for step s of sample b.
/// features is (B * N) x |F| with row b * N + i.
struct BatchInput {
  std::size_t batch = 0;
  std::size_t nodes = 0;
  std::size_t steps = 0;
  std::vector<ad::Tensor> basis;
  ad::Tensor features;
  ad::Tensor targets;  // (B * N) x 1, normalized; empty when unknown

  std::size_t rows() const { return batch * nodes; }
};

namespace detail {

inline void scatter_basis(const std::vector<ad::Tensor>& terms, std::size_t b, std::size_t batch,
                          ad::Tensor& dst) {
  const std::size_t n = terms.front().rows();
  const std::size_t steps = terms.front().cols();
  const std::size_t k = terms.size();
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t i = 0; i < n; ++i) {
      double* row = dst.data() + ((s * batch + b) * n + i) * k;
      for (std::size_t o = 0; o < k; ++o) row[o] = terms[o](i, s);
    }
}

}  // namespace detail

/// Single-sample input from explicit graphs, an N x T window and N x |F|
/// features.
inline BatchInput make_input(const graph::GraphSnapshot& graphs, const ad::Tensor& x,
                             const ad::Tensor& features, std::size_t order) {
  if (graphs.empty()) throw ConfigError("model input: no graphs enabled");
  if (features.rows() != x.rows())
    throw DimensionError("model input: features and window disagree on node count");
  BatchInput in;
  in.batch = 1;
  in.nodes = x.rows();
  in.steps = x.cols();
  for (const auto& g : graphs) {
    ad::Tensor dst({in.steps * in.nodes, order});
    detail::scatter_basis(graph::chebyshev_basis(*g, x, order), 0, 1, dst);
    in.basis.push_back(std::move(dst));
  }
  in.features = features;
  return in;
}

/// Builds batches from a Dataset and a GraphSet.
///
/// Chebyshev terms of the static graphs are computed once for the whole
/// series and gathered per sample; the recent-trend graph is rebuilt (or
/// fetched from the graph cache) at each sample's anchor.
class InputAssembler {
 public:
  InputAssembler(std::shared_ptr<const data::Dataset> dataset,
                 std::shared_ptr<const graph::GraphSet> graphs, std::size_t order)
      : dataset_(std::move(dataset)), graphs_(std::move(graphs)), order_(order) {
    if (graphs_->kinds().empty()) throw ConfigError("model input: no graphs enabled");
    if (graphs_->nodes() != dataset_->stations())
      throw DimensionError("model input: graph set and dataset disagree on node count");
    const ad::Tensor& series = dataset_->normalized().values();
    for (graph::GraphKind kind : graphs_->kinds()) {
      if (kind == graph::GraphKind::recent_trend) {
        static_terms_.emplace_back();
      } else {
        static_terms_.push_back(
            graph::chebyshev_basis(*graphs_->static_laplacian(kind), series, order_));
      }
    }
  }

  const data::Dataset& dataset() const { return *dataset_; }
  const graph::GraphSet& graphs() const { return *graphs_; }
  std::size_t order() const noexcept { return order_; }

  BatchInput assemble(std::span<const data::Sample> samples) const {
    if (samples.empty()) throw ContractError("model input: empty batch");
    const auto kinds = graphs_->kinds();
    const std::size_t n = dataset_->stations();
    const std::size_t steps = dataset_->steps();
    const std::size_t batch = samples.size();
    BatchInput in;
    in.batch = batch;
    in.nodes = n;
    in.steps = steps;
    for (std::size_t g = 0; g < kinds.size(); ++g) in.basis.emplace_back(ad::Shape{steps * batch * n, order_});
    in.features = ad::Tensor({batch * n, data::kCalendarFeatures});
    in.targets = ad::Tensor({batch * n, 1});

    for (std::size_t b = 0; b < batch; ++b) {
      const data::Sample& smp = samples[b];
      const std::vector<std::size_t> idx = data::slice_indices(smp.anchor, dataset_->slice());
      for (std::size_t g = 0; g < kinds.size(); ++g) {
        if (kinds[g] == graph::GraphKind::recent_trend) {
          const auto lt = graphs_->dynamic_at(smp.anchor);
          detail::scatter_basis(graph::chebyshev_basis(*lt, dataset_->inputs(smp), order_), b,
                                batch, in.basis[g]);
          continue;
        }
        const auto& terms = static_terms_[g];
        for (std::size_t s = 0; s < steps; ++s)
          for (std::size_t i = 0; i < n; ++i) {
            double* row = in.basis[g].data() + ((s * batch + b) * n + i) * order_;
            for (std::size_t o = 0; o < order_; ++o) row[o] = terms[o](i, idx[s]);
          }
      }
      const ad::Tensor f = dataset_->features(smp);
      const ad::Tensor y = dataset_->target(smp);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < data::kCalendarFeatures; ++c) in.features(b * n + i, c) = f(i, c);
        in.targets[b * n + i] = y[i];
      }
    }
    return in;
  }

 private:
  std::shared_ptr<const data::Dataset> dataset_;
  std::shared_ptr<const graph::GraphSet> graphs_;
  std::size_t order_;
  std::vector<std::vector<ad::Tensor>> static_terms_;  // per enabled graph; empty for recent trend
};

}  // namespace sthgcn::model
