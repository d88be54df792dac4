#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sthgcn/app/config.hpp"
#include "sthgcn/baseline/baselines.hpp"
#include "sthgcn/data/csv_io.hpp"
#include "sthgcn/data/dataset.hpp"
#include "sthgcn/data/scaler.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/graph/adjacency.hpp"
#include "sthgcn/graph/edge_list.hpp"
#include "sthgcn/graph/graph_set.hpp"
#include "sthgcn/model/checkpoint.hpp"
#include "sthgcn/model/inputs.hpp"
#include "sthgcn/model/sthgcn.hpp"
#include "sthgcn/train/loss.hpp"
#include "sthgcn/train/trainer.hpp"

namespace sthgcn::app {

/// Series and side data as read from disk.
struct Inputs {
  data::TrafficSeries series;        // imputed
  std::size_t imputed_cells = 0;
  std::vector<data::Station> stations;  // aligned with the series; empty if not given
  data::HolidayCalendar holidays;
  std::optional<graph::AdjacencyMatrix> spatial_edges;
};

inline Inputs load_inputs(const RunConfig& cfg) {
  data::TrafficSeries raw = data::read_traffic_csv(cfg.traffic);
  Inputs in{data::impute_missing(raw), raw.missing_count(), {}, {}, std::nullopt};
  if (!cfg.stations.empty())
    in.stations = data::align_stations(data::read_stations_csv(cfg.stations), in.series.station_ids());
  if (!cfg.holidays.empty()) in.holidays = data::read_holidays(cfg.holidays);
  if (!cfg.graphs.spatial_edges.empty()) {
    in.spatial_edges = graph::read_edge_list(cfg.graphs.spatial_edges).adjacency;
    if (in.spatial_edges->nodes() != in.series.stations())
      throw InputError(cfg.graphs.spatial_edges + ": edge list has " +
                       std::to_string(in.spatial_edges->nodes()) + " nodes, series has " +
                       std::to_string(in.series.stations()));
  }
  return in;
}

/// Everything shared by the per-horizon runs: splits, scaler and graphs.
struct Experiment {
  RunConfig config;
  std::shared_ptr<const data::TrafficSeries> series;
  data::HolidayCalendar holidays;
  data::Splits splits;
  data::ZScoreScaler scaler;
  std::optional<graph::AdjacencyMatrix> spatial;
  std::optional<graph::AdjacencyMatrix> functional;
  std::shared_ptr<const graph::GraphSet> graphs;
};

inline Experiment prepare(const RunConfig& cfg, const Inputs& in) {
  Experiment e;
  e.config = cfg;
  e.config.slice.points_per_day = in.series.points_per_day();
  e.config.slice.validate();
  e.series = std::make_shared<const data::TrafficSeries>(in.series);
  e.holidays = in.holidays;
  e.splits = data::split_by_date(*e.series, data::parse_date(cfg.train_end), data::parse_date(cfg.val_end));
  e.scaler = data::ZScoreScaler::fit(*e.series, e.splits.train.begin, e.splits.train.end, cfg.scaler);

  const auto& g = cfg.graphs;
  if (g.spatial) {
    if (in.spatial_edges) {
      e.spatial = *in.spatial_edges;
    } else {
      if (in.stations.size() != e.series->stations())
        throw InputError("spatial graph: station coordinates are required");
      e.spatial = graph::build_spatial_proximity(in.stations, g.sigma, g.spatial_keep);
    }
  }
  if (g.functional)
    e.functional = graph::build_functional_similarity(*e.series, e.splits.train.begin,
                                                      e.splits.train.end, g.functional_keep);
  std::optional<graph::RecentTrendSpec> recent;
  if (g.recent_trend) recent = graph::RecentTrendSpec{g.history, g.recent_keep};
  // Every anchor fits in the cache, so each dynamic graph is built once.
  const std::size_t capacity = std::max(g.cache_capacity, e.series->length());
  e.graphs = std::make_shared<const graph::GraphSet>(e.spatial, e.functional, recent, e.series, capacity);
  return e;
}

struct HorizonRun {
  std::size_t horizon = 1;
  train::FitResult fit;
  train::Metrics test;
  train::Metrics historical_average;
  train::Metrics seasonal_naive;
  train::Predictions predictions;  // test set, raw units
  model::Checkpoint checkpoint;
};

inline std::shared_ptr<const data::Dataset> make_dataset(const Experiment& e, std::size_t horizon) {
  data::SliceConfig slice = e.config.slice;
  slice.horizon = horizon;
  return std::make_shared<const data::Dataset>(*e.series, e.scaler, slice, e.holidays);
}

inline model::ModelConfig model_config(const Experiment& e) {
  model::ModelConfig m;
  m.nodes = e.series->stations();
  m.cheb_order = e.config.cheb_order;
  m.conv_channels = e.config.conv_channels;
  m.hidden = e.config.hidden;
  m.graphs = e.config.graphs.selection();
  return m;
}

/// Baseline metrics on the targets of `samples`, both fitted or looked up
/// on training data only.
inline void baseline_metrics(const Experiment& e, const std::vector<data::Sample>& samples,
                             HorizonRun& run) {
  const auto ha = baseline::ha_fit(*e.series, e.splits.train.begin, e.splits.train.end);
  const std::size_t period = 7 * e.series->points_per_day();
  std::vector<double> truth, ha_pred, sn_pred;
  for (const auto& s : samples) {
    const ad::Tensor h = baseline::ha_predict(ha, e.series->timestamp(s.target));
    const ad::Tensor sn = baseline::seasonal_naive_predict(*e.series, s.anchor, s.target - s.anchor, period);
    for (std::size_t i = 0; i < e.series->stations(); ++i) {
      truth.push_back((*e.series)(i, s.target));
      ha_pred.push_back(h[i]);
      sn_pred.push_back(sn[i]);
    }
  }
  run.historical_average = train::metrics(ha_pred, truth);
  run.seasonal_naive = train::metrics(sn_pred, truth);
}

inline HorizonRun run_horizon(const Experiment& e, std::size_t horizon,
                              const train::EpochCallback& on_epoch = {}) {
  HorizonRun run;
  run.horizon = horizon;
  const auto ds = make_dataset(e, horizon);
  const model::InputAssembler assembler(ds, e.graphs, e.config.cheb_order);
  const auto train_set = ds->samples(e.splits.train);
  const auto val_set = ds->samples(e.splits.validation);
  const auto test_set = ds->samples(e.splits.test);

  const model::ModelConfig mc = model_config(e);
  run.fit = train::fit(assembler, model::init_params(mc, e.config.train.seed), train_set, val_set,
                       e.config.train, on_epoch);
  run.predictions = train::predict_samples(assembler, run.fit.best, test_set);
  run.test = train::metrics(run.predictions.predicted, run.predictions.actual);
  baseline_metrics(e, test_set, run);

  auto& c = run.checkpoint;
  c.model = mc;
  c.params = run.fit.best;
  c.slice = ds->slice();
  c.scaler = e.scaler;
  c.spatial = e.spatial;
  c.functional = e.functional;
  c.recent = e.graphs->recent_trend();
  c.station_ids = e.series->station_ids();
  c.granularity = e.series->granularity();
  c.holidays = e.holidays;
  return run;
}

/// Applies a saved model to an (imputed) series. `targets` selects the
/// target indices; anchors without enough history are skipped.
inline train::Predictions predict_with_checkpoint(const model::Checkpoint& c,
                                                  const data::TrafficSeries& series,
                                                  data::IndexRange targets) {
  if (series.station_ids() != c.station_ids)
    throw InputError("predict: series stations do not match the checkpoint");
  if (series.granularity() != c.granularity)
    throw InputError("predict: series granularity " + std::to_string(series.granularity()) +
                     " min does not match the checkpoint (" + std::to_string(c.granularity) + " min)");
  auto shared = std::make_shared<const data::TrafficSeries>(series);
  auto graphs = std::make_shared<const graph::GraphSet>(c.spatial, c.functional, c.recent, shared,
                                                        std::max<std::size_t>(256, series.length()));
  auto ds = std::make_shared<const data::Dataset>(series, c.scaler, c.slice, c.holidays);
  const model::InputAssembler assembler(ds, graphs, c.model.cheb_order);
  return train::predict_samples(assembler, c.params, ds->samples(targets));
}

// ---- output files ----------------------------------------------------------

inline std::string metrics_json(std::size_t horizon, const train::Metrics& m) {
  nlohmann::ordered_json j = {{"horizon_steps", horizon}, {"rmse", m.rmse}, {"mae", m.mae}};
  return j.dump();
}

inline void write_training_log(std::ostream& out, const std::vector<train::EpochLog>& log) {
  using data::csv::format_double;
  out << "epoch,train_loss,val_rmse,lr\n";
  for (const auto& e : log)
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_rmse) << ','
        << format_double(e.lr) << '\n';
}

inline void write_predictions(std::ostream& out, const data::TrafficSeries& series,
                              const train::Predictions& p) {
  using data::csv::format_double;
  out << "timestamp,station_id,y_true,y_pred\n";
  const std::size_t n = series.stations();
  for (std::size_t s = 0; s < p.samples.size(); ++s) {
    const std::string ts = data::format_timestamp(series.timestamp(p.samples[s].target));
    for (std::size_t i = 0; i < n; ++i)
      out << ts << ',' << series.station_ids()[i] << ',' << format_double(p.actual[s * n + i]) << ','
          << format_double(p.predicted[s * n + i]) << '\n';
  }
}

struct PredictionRecord {
  std::string timestamp;
  std::string station_id;
  double actual = 0.0;
  double predicted = 0.0;
};

inline std::vector<PredictionRecord> read_predictions(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || data::csv::trim(line) != "timestamp,station_id,y_true,y_pred")
    throw InputError(name + ": expected header 'timestamp,station_id,y_true,y_pred'");
  std::vector<PredictionRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (data::csv::trim(line).empty()) continue;
    const auto f = data::csv::split(data::csv::trim(line));
    const std::string where = name + ":" + std::to_string(row);
    if (f.size() != 4) throw InputError(where + ": expected 4 fields");
    out.push_back({std::string(f[0]), std::string(f[1]), data::csv::parse_double(f[2], where),
                   data::csv::parse_double(f[3], where)});
  }
  if (out.empty()) throw EmptyDatasetError(name + ": no predictions");
  return out;
}

inline train::Metrics prediction_metrics(const std::vector<PredictionRecord>& records) {
  std::vector<double> pred, truth;
  for (const auto& r : records) {
    pred.push_back(r.predicted);
    truth.push_back(r.actual);
  }
  return train::metrics(pred, truth);
}

inline std::string output_path(const RunConfig& cfg, const std::string& file) {
  return (std::filesystem::path(cfg.output_dir) / file).string();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

/// Writes training log, metrics, baselines, predictions and checkpoint for
/// one horizon into the output directory.
inline void write_outputs(const Experiment& e, const HorizonRun& run) {
  std::filesystem::create_directories(e.config.output_dir);
  const std::string k = std::to_string(run.horizon);
  {
    auto out = data::csv::open_out(output_path(e.config, "train_log_h" + k + ".csv"));
    write_training_log(out, run.fit.log);
  }
  write_text(output_path(e.config, "metrics_h" + k + ".json"), metrics_json(run.horizon, run.test) + "\n");
  nlohmann::ordered_json base = {
      {"horizon_steps", run.horizon},
      {"historical_average", {{"rmse", run.historical_average.rmse}, {"mae", run.historical_average.mae}}},
      {"seasonal_naive", {{"rmse", run.seasonal_naive.rmse}, {"mae", run.seasonal_naive.mae}}},
  };
  write_text(output_path(e.config, "baselines_h" + k + ".json"), base.dump() + "\n");
  {
    auto out = data::csv::open_out(output_path(e.config, "predictions_h" + k + ".csv"));
    write_predictions(out, *e.series, run.predictions);
  }
  model::save_checkpoint(output_path(e.config, "checkpoint_h" + k + ".json"), run.checkpoint);
}

}  // namespace sthgcn::app
