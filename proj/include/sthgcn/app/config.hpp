#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "sthgcn/data/scaler.hpp"
#include "sthgcn/data/slicing.hpp"
#include "sthgcn/data/time.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/graph_set.hpp"
#include "sthgcn/train/trainer.hpp"

namespace sthgcn::app {

struct GraphSettings {
  bool spatial = true;
  double sigma = 100.0;           // meters
  double spatial_keep = 0.9;
  std::string spatial_edges;      // optional edge list replacing the distance graph
  bool functional = true;
  double functional_keep = 0.9;
  bool recent_trend = true;
  std::size_t history = 48;
  double recent_keep = 0.9;
  std::size_t cache_capacity = 256;

  graph::GraphSelection selection() const { return {spatial, functional, recent_trend}; }
};

struct DiagnosticsSettings {
  std::string focus_station;      // empty: first station
  std::size_t anchor_stride = 4;  // points between timeline rows
};

/// Complete description of a run. Paths are absolute after loading.
struct RunConfig {
  std::string traffic;
  std::string stations;
  std::string holidays;
  std::string output_dir = "out";
  std::string train_end;  // last training day, YYYY-MM-DD
  std::string val_end;    // last validation day
  data::SliceConfig slice;  // points_per_day and horizon are set from the data and the run
  data::ScalerMode scaler = data::ScalerMode::global;
  GraphSettings graphs;
  std::size_t cheb_order = 3;
  std::size_t conv_channels = 64;
  std::size_t hidden = 32;
  train::TrainConfig train;
  std::vector<std::size_t> horizons{1};
  DiagnosticsSettings diagnostics;
};

namespace detail {

using nlohmann::json;

// Reads one JSON object, tracking which keys were consumed so that unknown
// keys can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  // Parsed text gives unsigned numbers; JSON built in code may hold signed ones.
  static bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!non_negative_integer(v)) throw ConfigError(field(key) + ": expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!v.is_array()) throw ConfigError(field(key) + ": expected an array");
      for (const auto& e : v)
        if (!non_negative_integer(e)) throw ConfigError(field(key) + ": expected non-negative integers");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    }
    try {
      out = v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type (" + std::string(j_.at(key).type_name()) + ")");
    }
  }

  template <class T>
  void require(const std::string& key, T& out) {
    if (!j_.contains(key)) throw ConfigError(field(key) + ": missing");
    read(key, out);
  }

  ObjectReader child(const std::string& key) {
    seen_.insert(key);
    return ObjectReader(j_.at(key), field(key));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(field(key) + ": unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "config " : path_ + " "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

}  // namespace detail

/// Parses and validates a run configuration. Relative paths are resolved
/// against `base_dir`. When `check_files` is set, every referenced input
/// file must exist.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                  bool check_files = true) {
  using detail::check;
  RunConfig c;
  detail::ObjectReader root(j, "");

  auto files = root.child("data");
  files.require("traffic", c.traffic);
  files.read("stations", c.stations);
  files.read("holidays", c.holidays);
  files.finish();
  root.read("output_dir", c.output_dir);

  auto split = root.child("split");
  split.require("train_end", c.train_end);
  split.require("val_end", c.val_end);
  split.finish();
  try {
    check(data::parse_date(c.train_end) < data::parse_date(c.val_end), "split",
          "train_end must precede val_end");
  } catch (const InputError& e) {
    throw ConfigError(std::string("split: ") + e.what());
  }

  if (root.has("slice")) {
    auto s = root.child("slice");
    s.read("segment_length", c.slice.segment_length);
    s.read("recent", c.slice.recent);
    s.read("daily", c.slice.daily);
    s.read("weekly", c.slice.weekly);
    s.finish();
    check(c.slice.segment_length >= 1, "slice.segment_length", "must be >= 1");
    check(c.slice.recent >= 1, "slice.recent", "must be >= 1");
  }

  std::string scaler = "global";
  root.read("scaler", scaler);
  check(scaler == "global" || scaler == "per_node", "scaler", "must be \"global\" or \"per_node\"");
  c.scaler = scaler == "global" ? data::ScalerMode::global : data::ScalerMode::per_node;

  if (root.has("graphs")) {
    auto g = root.child("graphs");
    auto& gs = c.graphs;
    if (g.has("spatial")) {
      auto s = g.child("spatial");
      s.read("enabled", gs.spatial);
      s.read("sigma", gs.sigma);
      s.read("keep", gs.spatial_keep);
      s.read("edges", gs.spatial_edges);
      s.finish();
      check(gs.sigma > 0.0, "graphs.spatial.sigma", "must be positive");
      check(gs.spatial_keep > 0.0 && gs.spatial_keep < 1.0, "graphs.spatial.keep", "must be in (0, 1)");
    }
    if (g.has("functional")) {
      auto s = g.child("functional");
      s.read("enabled", gs.functional);
      s.read("keep", gs.functional_keep);
      s.finish();
      check(gs.functional_keep > 0.0 && gs.functional_keep < 1.0, "graphs.functional.keep",
            "must be in (0, 1)");
    }
    if (g.has("recent_trend")) {
      auto s = g.child("recent_trend");
      s.read("enabled", gs.recent_trend);
      s.read("history", gs.history);
      s.read("keep", gs.recent_keep);
      s.finish();
      check(gs.history >= 2, "graphs.recent_trend.history", "must be >= 2");
      check(gs.recent_keep > 0.0 && gs.recent_keep < 1.0, "graphs.recent_trend.keep",
            "must be in (0, 1)");
    }
    g.read("cache_capacity", gs.cache_capacity);
    g.finish();
    check(gs.cache_capacity >= 1, "graphs.cache_capacity", "must be >= 1");
    check(gs.spatial || gs.functional || gs.recent_trend, "graphs", "at least one graph must be enabled");
  }

  if (root.has("model")) {
    auto m = root.child("model");
    m.read("cheb_order", c.cheb_order);
    m.read("conv_channels", c.conv_channels);
    m.read("hidden", c.hidden);
    m.finish();
    check(c.cheb_order >= 1, "model.cheb_order", "must be >= 1");
    check(c.conv_channels >= 1, "model.conv_channels", "must be >= 1");
    check(c.hidden >= 1, "model.hidden", "must be >= 1");
  }

  if (root.has("train")) {
    auto t = root.child("train");
    auto& tc = c.train;
    t.read("alpha", tc.alpha);
    t.read("lr0", tc.lr0);
    t.read("decay", tc.decay);
    t.read("decay_every", tc.decay_every);
    t.read("epochs", tc.epochs);
    t.read("batch_size", tc.batch_size);
    t.read("rho", tc.rmsprop.rho);
    t.read("eps", tc.rmsprop.eps);
    t.read("seed", tc.seed);
    t.read("clip_norm", tc.clip_norm);
    t.finish();
    tc.validate();
  }

  root.read("horizons", c.horizons);
  check(!c.horizons.empty(), "horizons", "must list at least one horizon");
  for (std::size_t k : c.horizons) check(k >= 1, "horizons", "every horizon must be >= 1");

  if (root.has("diagnostics")) {
    auto d = root.child("diagnostics");
    d.read("focus_station", c.diagnostics.focus_station);
    d.read("anchor_stride", c.diagnostics.anchor_stride);
    d.finish();
    check(c.diagnostics.anchor_stride >= 1, "diagnostics.anchor_stride", "must be >= 1");
  }
  root.finish();

  c.traffic = detail::resolve(base_dir, c.traffic);
  c.stations = detail::resolve(base_dir, c.stations);
  c.holidays = detail::resolve(base_dir, c.holidays);
  c.graphs.spatial_edges = detail::resolve(base_dir, c.graphs.spatial_edges);
  c.output_dir = detail::resolve(base_dir, c.output_dir);

  if (c.graphs.spatial && c.graphs.spatial_edges.empty())
    check(!c.stations.empty(), "data.stations", "required when the spatial graph is built from coordinates");
  if (check_files) {
    auto exists = [](const std::string& field, const std::string& p) {
      if (!p.empty() && !std::filesystem::is_regular_file(p))
        throw ConfigError(field + ": file not found: " + p);
    };
    exists("data.traffic", c.traffic);
    exists("data.stations", c.stations);
    exists("data.holidays", c.holidays);
    exists("graphs.spatial.edges", c.graphs.spatial_edges);
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path, bool check_files = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": not valid JSON: " + e.what());
  }
  const auto base = std::filesystem::absolute(std::filesystem::path(path)).parent_path();
  try {
    return parse_run_config(j, base, check_files);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// JSON form of a configuration, with paths written as given.
inline nlohmann::ordered_json run_config_json(const RunConfig& c) {
  const auto& g = c.graphs;
  nlohmann::ordered_json spatial = {{"enabled", g.spatial}, {"sigma", g.sigma}, {"keep", g.spatial_keep}};
  if (!g.spatial_edges.empty()) spatial["edges"] = g.spatial_edges;
  nlohmann::ordered_json data = {{"traffic", c.traffic}};
  if (!c.stations.empty()) data["stations"] = c.stations;
  if (!c.holidays.empty()) data["holidays"] = c.holidays;
  return {
      {"data", data},
      {"output_dir", c.output_dir},
      {"split", {{"train_end", c.train_end}, {"val_end", c.val_end}}},
      {"slice",
       {{"segment_length", c.slice.segment_length},
        {"recent", c.slice.recent},
        {"daily", c.slice.daily},
        {"weekly", c.slice.weekly}}},
      {"scaler", c.scaler == data::ScalerMode::global ? "global" : "per_node"},
      {"graphs",
       {{"spatial", spatial},
        {"functional", {{"enabled", g.functional}, {"keep", g.functional_keep}}},
        {"recent_trend", {{"enabled", g.recent_trend}, {"history", g.history}, {"keep", g.recent_keep}}},
        {"cache_capacity", g.cache_capacity}}},
      {"model", {{"cheb_order", c.cheb_order}, {"conv_channels", c.conv_channels}, {"hidden", c.hidden}}},
      {"train",
       {{"alpha", c.train.alpha},
        {"lr0", c.train.lr0},
        {"decay", c.train.decay},
        {"decay_every", c.train.decay_every},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"rho", c.train.rmsprop.rho},
        {"eps", c.train.rmsprop.eps},
        {"seed", c.train.seed},
        {"clip_norm", c.train.clip_norm}}},
      {"horizons", c.horizons},
      {"diagnostics",
       {{"focus_station", c.diagnostics.focus_station}, {"anchor_stride", c.diagnostics.anchor_stride}}},
  };
}

}  // namespace sthgcn::app
