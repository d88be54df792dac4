#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sthgcn/data/series.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/adjacency.hpp"
#include "sthgcn/graph/laplacian.hpp"

namespace sthgcn::graph {

enum class GraphKind { spatial, functional, recent_trend };

inline const char* graph_kind_name(GraphKind k) {
  switch (k) {
    case GraphKind::spatial: return "spatial_proximity";
    case GraphKind::functional: return "functional_similarity";
    case GraphKind::recent_trend: return "recent_trend";
  }
  return "unknown";
}

/// Which graphs take part in the hybrid convolution.
struct GraphSelection {
  bool spatial = true;
  bool functional = true;
  bool recent_trend = true;

  std::vector<GraphKind> kinds() const {
    std::vector<GraphKind> out;
    if (spatial) out.push_back(GraphKind::spatial);
    if (functional) out.push_back(GraphKind::functional);
    if (recent_trend) out.push_back(GraphKind::recent_trend);
    return out;
  }
  std::size_t count() const { return kinds().size(); }

  friend bool operator==(const GraphSelection&, const GraphSelection&) = default;
};

struct RecentTrendSpec {
  std::size_t history = 48;  // H
  double keep = 0.9;         // p
};

/// Scaled Laplacians of the enabled graphs at one anchor, in
/// GraphSelection::kinds() order.
using GraphSnapshot = std::vector<std::shared_ptr<const ScaledLaplacian>>;

/// Static spatial and functional graphs plus the per-anchor recent-trend
/// graph, built lazily from a series and kept in a least-recently-used
/// cache. Lookups are thread safe.
class GraphSet {
 public:
  GraphSet(std::optional<AdjacencyMatrix> spatial, std::optional<AdjacencyMatrix> functional,
           std::optional<RecentTrendSpec> recent,
           std::shared_ptr<const data::TrafficSeries> series, std::size_t cache_capacity = 256)
      : spatial_adj_(std::move(spatial)),
        functional_adj_(std::move(functional)),
        recent_(recent),
        series_(std::move(series)),
        capacity_(cache_capacity) {
    if (spatial_adj_) spatial_ = std::make_shared<const ScaledLaplacian>(scaled_laplacian(*spatial_adj_));
    if (functional_adj_)
      functional_ = std::make_shared<const ScaledLaplacian>(scaled_laplacian(*functional_adj_));
    if (recent_ && !series_) throw InputError("graph set: recent-trend graph needs a series");
    if (capacity_ == 0) throw ConfigError("graph set: cache capacity must be positive");
    std::size_t n = 0;
    auto check_n = [&](std::size_t m) {
      if (n && m != n) throw DimensionError("graph set: graphs disagree on node count");
      n = m;
    };
    if (spatial_adj_) check_n(spatial_adj_->nodes());
    if (functional_adj_) check_n(functional_adj_->nodes());
    if (recent_) check_n(series_->stations());
    nodes_ = n;
  }

  std::size_t nodes() const noexcept { return nodes_; }

  GraphSelection selection() const {
    return {spatial_adj_.has_value(), functional_adj_.has_value(), recent_.has_value()};
  }
  std::vector<GraphKind> kinds() const { return selection().kinds(); }

  const std::optional<AdjacencyMatrix>& spatial_adjacency() const noexcept { return spatial_adj_; }
  const std::optional<AdjacencyMatrix>& functional_adjacency() const noexcept {
    return functional_adj_;
  }
  const std::optional<RecentTrendSpec>& recent_trend() const noexcept { return recent_; }

  std::shared_ptr<const ScaledLaplacian> static_laplacian(GraphKind k) const {
    if (k == GraphKind::spatial) return spatial_;
    if (k == GraphKind::functional) return functional_;
    return nullptr;
  }

  /// A_RT at anchor t (adjacency only, uncached).
  AdjacencyMatrix recent_adjacency(std::size_t t) const {
    if (!recent_) throw ConfigError("graph set: recent-trend graph is disabled");
    return build_recent_trend(*series_, t, recent_->history, recent_->keep);
  }

  std::shared_ptr<const ScaledLaplacian> dynamic_at(std::size_t t) const {
    if (!recent_) throw ConfigError("graph set: recent-trend graph is disabled");
    {
      std::lock_guard lock(mutex_);
      auto it = index_.find(t);
      if (it != index_.end()) {
        ++hits_;
        lru_.splice(lru_.begin(), lru_, it->second);
        return it->second->second;
      }
      ++misses_;
    }
    auto built = std::make_shared<const ScaledLaplacian>(scaled_laplacian(recent_adjacency(t)));
    std::lock_guard lock(mutex_);
    auto it = index_.find(t);
    if (it != index_.end()) return it->second->second;
    lru_.emplace_front(t, built);
    index_[t] = lru_.begin();
    while (lru_.size() > capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    return built;
  }

  GraphSnapshot at(std::size_t t) const {
    GraphSnapshot out;
    if (spatial_) out.push_back(spatial_);
    if (functional_) out.push_back(functional_);
    if (recent_) out.push_back(dynamic_at(t));
    return out;
  }

  std::size_t cache_size() const {
    std::lock_guard lock(mutex_);
    return lru_.size();
  }
  std::size_t cache_hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }
  std::size_t cache_misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
  }

 private:
  using Entry = std::pair<std::size_t, std::shared_ptr<const ScaledLaplacian>>;

  std::optional<AdjacencyMatrix> spatial_adj_;
  std::optional<AdjacencyMatrix> functional_adj_;
  std::optional<RecentTrendSpec> recent_;
  std::shared_ptr<const data::TrafficSeries> series_;
  std::shared_ptr<const ScaledLaplacian> spatial_;
  std::shared_ptr<const ScaledLaplacian> functional_;
  std::size_t nodes_ = 0;
  std::size_t capacity_;

  mutable std::mutex mutex_;
  mutable std::list<Entry> lru_;
  mutable std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
};

}  // namespace sthgcn::graph
