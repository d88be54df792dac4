#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sthgcn/data/dataset.hpp"
#include "sthgcn/data/scaler.hpp"
#include "sthgcn/data/slicing.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/adjacency.hpp"
#include "sthgcn/graph/graph_set.hpp"
#include "sthgcn/model/params.hpp"

namespace sthgcn::model {

/// Everything needed to rebuild a trained predictor for one horizon.
struct Checkpoint {
  ModelConfig model;
  ModelParams params;
  data::SliceConfig slice;
  data::ZScoreScaler scaler;
  std::optional<graph::AdjacencyMatrix> spatial;
  std::optional<graph::AdjacencyMatrix> functional;
  std::optional<graph::RecentTrendSpec> recent;
  std::vector<std::string> station_ids;
  int granularity = 15;
  data::HolidayCalendar holidays;
};

inline constexpr const char* kCheckpointFormat = "sthgcn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

using nlohmann::json;

inline json edges_json(const std::optional<graph::AdjacencyMatrix>& adj) {
  if (!adj) return nullptr;
  json edges = json::array();
  for (const auto& [i, j] : adj->edges()) edges.push_back({i, j});
  return {{"nodes", adj->nodes()}, {"edges", edges}};
}

inline std::optional<graph::AdjacencyMatrix> edges_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  graph::AdjacencyMatrix adj(j.at("nodes").get<std::size_t>());
  for (const auto& e : j.at("edges")) {
    const auto a = e.at(0).get<std::size_t>(), b = e.at(1).get<std::size_t>();
    if (a >= adj.nodes() || b >= adj.nodes()) throw InputError("checkpoint: edge index out of range");
    adj.set_edge(a, b);
  }
  return adj;
}

}  // namespace detail

/// Serializes to JSON. Doubles are written in shortest round-trip form, so
/// loading restores every value bit for bit.
inline nlohmann::json to_json(const Checkpoint& c) {
  using nlohmann::json;
  json params = json::object();
  for (const auto& [name, t] : c.params.named())
    params[name] = {{"shape", t->shape()},
                    {"values", std::vector<double>(t->values().begin(), t->values().end())}};
  json holidays = json::array();
  for (data::Minutes day : c.holidays.days()) holidays.push_back(data::format_date(day * data::kMinutesPerDay));
  json recent = nullptr;
  if (c.recent) recent = {{"history", c.recent->history}, {"keep", c.recent->keep}};
  return {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"model",
       {{"nodes", c.model.nodes},
        {"cheb_order", c.model.cheb_order},
        {"conv_channels", c.model.conv_channels},
        {"hidden", c.model.hidden},
        {"features", c.model.features},
        {"graphs",
         {{"spatial", c.model.graphs.spatial},
          {"functional", c.model.graphs.functional},
          {"recent_trend", c.model.graphs.recent_trend}}}}},
      {"slice",
       {{"segment_length", c.slice.segment_length},
        {"recent", c.slice.recent},
        {"daily", c.slice.daily},
        {"weekly", c.slice.weekly},
        {"points_per_day", c.slice.points_per_day},
        {"horizon", c.slice.horizon}}},
      {"scaler",
       {{"mode", c.scaler.mode() == data::ScalerMode::global ? "global" : "per_node"},
        {"mean", c.scaler.mean()},
        {"std", c.scaler.stddev()}}},
      {"graphs",
       {{"spatial", detail::edges_json(c.spatial)},
        {"functional", detail::edges_json(c.functional)},
        {"recent_trend", recent}}},
      {"station_ids", c.station_ids},
      {"granularity", c.granularity},
      {"holidays", holidays},
      {"params", params},
  };
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kCheckpointFormat) throw InputError("checkpoint: unknown format");
    if (j.at("version") != kCheckpointVersion) throw InputError("checkpoint: unsupported version");
    Checkpoint c;
    const auto& m = j.at("model");
    c.model.nodes = m.at("nodes");
    c.model.cheb_order = m.at("cheb_order");
    c.model.conv_channels = m.at("conv_channels");
    c.model.hidden = m.at("hidden");
    c.model.features = m.at("features");
    c.model.graphs = {m.at("graphs").at("spatial"), m.at("graphs").at("functional"),
                      m.at("graphs").at("recent_trend")};
    c.model.validate();

    const auto& s = j.at("slice");
    c.slice.segment_length = s.at("segment_length");
    c.slice.recent = s.at("recent");
    c.slice.daily = s.at("daily");
    c.slice.weekly = s.at("weekly");
    c.slice.points_per_day = s.at("points_per_day");
    c.slice.horizon = s.at("horizon");
    c.slice.validate();

    const auto& sc = j.at("scaler");
    const std::string mode = sc.at("mode");
    if (mode != "global" && mode != "per_node") throw InputError("checkpoint: bad scaler mode");
    c.scaler = data::ZScoreScaler(mode == "global" ? data::ScalerMode::global : data::ScalerMode::per_node,
                                  sc.at("mean").get<std::vector<double>>(),
                                  sc.at("std").get<std::vector<double>>());

    const auto& g = j.at("graphs");
    c.spatial = detail::edges_from(g.at("spatial"));
    c.functional = detail::edges_from(g.at("functional"));
    if (!g.at("recent_trend").is_null())
      c.recent = graph::RecentTrendSpec{g.at("recent_trend").at("history"),
                                        g.at("recent_trend").at("keep")};
    if (c.spatial.has_value() != c.model.graphs.spatial ||
        c.functional.has_value() != c.model.graphs.functional ||
        c.recent.has_value() != c.model.graphs.recent_trend)
      throw InputError("checkpoint: stored graphs do not match the enabled graphs");

    c.station_ids = j.at("station_ids").get<std::vector<std::string>>();
    c.granularity = j.at("granularity");
    for (const auto& d : j.at("holidays")) c.holidays.add(data::parse_date(d.get<std::string>()));
    if (c.station_ids.size() != c.model.nodes)
      throw InputError("checkpoint: station list does not match node count");

    c.params = init_params(c.model, 0);
    const auto& p = j.at("params");
    for (auto& [name, t] : c.params.named()) {
      const auto& e = p.at(name);
      Tensor loaded(e.at("shape").get<Shape>(), e.at("values").get<std::vector<double>>());
      if (loaded.shape() != t->shape())
        throw InputError("checkpoint: parameter '" + name + "' has shape " +
                         ad::shape_string(loaded.shape()) + ", expected " +
                         ad::shape_string(t->shape()));
      *t = std::move(loaded);
    }
    if (p.size() != c.params.named().size()) throw InputError("checkpoint: unexpected parameters");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: malformed file: ") + e.what());
  } catch (const DimensionError& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << to_json(c).dump(1) << '\n';
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace sthgcn::model
