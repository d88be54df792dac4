// Command-line front end: synth, ingest-check, graphs, train, predict,
// evaluate.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sthgcn/sthgcn.hpp"

namespace fs = std::filesystem;
using namespace sthgcn;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4, kOther = 1 };

std::string fmt(double v) { return data::csv::format_double(v); }

std::map<std::string, std::string> keep_params(double keep) { return {{"p", fmt(keep)}}; }

// ---- synth -----------------------------------------------------------------

int cmd_synth(const synth::SynthSpec& spec, const std::string& out_dir) {
  const synth::SynthData d = synth::generate(spec);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  data::write_traffic_csv((out / "traffic.csv").string(), d.series);
  data::write_stations_csv((out / "stations.csv").string(), d.stations);
  app::write_text((out / "holidays.txt").string(), "# one YYYY-MM-DD per line\n");
  graph::write_edge_list((out / "truth_neighbors.csv").string(), d.neighbors, "grid_neighbors");
  graph::write_edge_list((out / "truth_functional.csv").string(), d.same_cluster, "same_cluster");

  // Ready-to-run configuration: all weeks but the last two for training,
  // then one week each for validation and test.
  app::RunConfig cfg;
  cfg.traffic = "traffic.csv";
  cfg.stations = "stations.csv";
  cfg.holidays = "holidays.txt";
  cfg.output_dir = "out";
  const data::Minutes start = data::parse_date(spec.start);
  const auto weeks = static_cast<data::Minutes>(spec.weeks);
  const data::Minutes train_weeks = weeks >= 3 ? weeks - 2 : 1;
  cfg.train_end = data::format_date(start + (train_weeks * 7 - 1) * data::kMinutesPerDay);
  cfg.val_end = data::format_date(start + ((train_weeks + 1) * 7 - 1) * data::kMinutesPerDay);
  cfg.horizons = {1, 2, 3, 4};
  cfg.train.seed = spec.seed;
  cfg.diagnostics.focus_station = d.stations.front().id;
  app::write_text((out / "config.json").string(), app::run_config_json(cfg).dump(2) + "\n");

  std::cout << "wrote " << d.series.stations() << " stations x " << d.series.length()
            << " points to " << out_dir << '\n';
  return kOk;
}

// ---- ingest-check ------------------------------------------------------------

int cmd_ingest_check(const app::RunConfig& cfg) {
  const app::Inputs in = app::load_inputs(cfg);
  const app::Experiment e = app::prepare(cfg, in);
  const auto& s = *e.series;
  std::cout << "stations: " << s.stations() << '\n'
            << "points: " << s.length() << " (" << s.granularity() << " min, "
            << s.points_per_day() << " per day)\n"
            << "range: " << data::format_timestamp(s.timestamp(0)) << " .. "
            << data::format_timestamp(s.timestamp(s.length() - 1)) << '\n'
            << "imputed cells: " << in.imputed_cells << '\n'
            << "holidays: " << in.holidays.days().size() << '\n'
            << "scaler: mean " << fmt(e.scaler.mean().front()) << ", std "
            << fmt(e.scaler.stddev().front()) << '\n'
            << "input steps T: " << e.config.slice.steps() << ", min anchor "
            << e.config.slice.min_anchor() << '\n';
  for (std::size_t k : cfg.horizons) {
    const auto ds = app::make_dataset(e, k);
    std::cout << "horizon " << k << ": samples train " << ds->samples(e.splits.train).size()
              << ", validation " << ds->samples(e.splits.validation).size() << ", test "
              << ds->samples(e.splits.test).size() << '\n';
  }
  if (e.spatial) std::cout << "spatial edges: " << e.spatial->edge_count() << '\n';
  if (e.functional) std::cout << "functional edges: " << e.functional->edge_count() << '\n';
  return kOk;
}

// ---- graphs ------------------------------------------------------------------

int cmd_graphs(const app::RunConfig& cfg) {
  const app::Inputs in = app::load_inputs(cfg);
  const app::Experiment e = app::prepare(cfg, in);
  fs::create_directories(cfg.output_dir);
  const fs::path out(cfg.output_dir);
  const auto& g = cfg.graphs;
  if (e.spatial) {
    auto params = keep_params(g.spatial_keep);
    if (g.spatial_edges.empty()) params["sigma"] = fmt(g.sigma);
    graph::write_edge_list((out / "spatial_proximity.csv").string(), *e.spatial,
                           g.spatial_edges.empty() ? "spatial_proximity" : "external", params);
  }
  if (e.functional)
    graph::write_edge_list((out / "functional_similarity.csv").string(), *e.functional,
                           "functional_similarity", keep_params(g.functional_keep));
  const auto& s = *e.series;
  if (g.recent_trend) {
    const std::size_t t = e.splits.train.end - 1;
    auto params = keep_params(g.recent_keep);
    params["H"] = std::to_string(g.history);
    params["anchor"] = std::to_string(t);
    graph::write_edge_list((out / "recent_trend_last_train.csv").string(), e.graphs->recent_adjacency(t),
                           "recent_trend", params);
  }

  std::size_t focus = 0;
  if (!cfg.diagnostics.focus_station.empty()) {
    const auto& ids = s.station_ids();
    const auto it = std::find(ids.begin(), ids.end(), cfg.diagnostics.focus_station);
    if (it == ids.end())
      throw ConfigError("diagnostics.focus_station: unknown station '" + cfg.diagnostics.focus_station + "'");
    focus = static_cast<std::size_t>(it - ids.begin());
  }
  std::vector<std::size_t> anchors;
  for (std::size_t t = g.history - 1; t < s.length(); t += cfg.diagnostics.anchor_stride) anchors.push_back(t);
  if (anchors.empty()) throw InsufficientDataError("graphs: series shorter than the PCC history");
  auto tl = data::csv::open_out((out / "pcc_timeline.csv").string());
  graph::write_pcc_timeline(tl, s, anchors, graph::pcc_timeline(s, focus, anchors, g.history));
  std::cout << "graphs written to " << cfg.output_dir << '\n';
  return kOk;
}

// ---- train -------------------------------------------------------------------

int cmd_train(const app::RunConfig& cfg) {
  const app::Inputs in = app::load_inputs(cfg);
  const app::Experiment e = app::prepare(cfg, in);
  for (std::size_t k : cfg.horizons) {
    std::cerr << "training horizon " << k << '\n';
    const app::HorizonRun run = app::run_horizon(e, k, [](const train::EpochLog& l) {
      std::fprintf(stderr, "  epoch %3zu  loss %.6g  val_rmse %.6g  lr %.3g\n", l.epoch, l.train_loss,
                   l.val_rmse, l.lr);
    });
    app::write_outputs(e, run);
    std::cout << app::metrics_json(k, run.test) << '\n';
    std::cerr << "  best epoch " << run.fit.best_epoch << "; HA rmse " << fmt(run.historical_average.rmse)
              << ", seasonal naive rmse " << fmt(run.seasonal_naive.rmse) << '\n';
  }
  return kOk;
}

// ---- predict -----------------------------------------------------------------

int cmd_predict(const std::string& checkpoint, const std::string& traffic, const std::string& from,
                const std::string& to, const std::string& out_dir) {
  const model::Checkpoint c = model::load_checkpoint(checkpoint);
  const data::TrafficSeries series = data::impute_missing(data::read_traffic_csv(traffic));
  const std::size_t k = c.slice.horizon;
  data::IndexRange targets{0, series.length()};
  if (!from.empty()) targets.begin = series.lower_index(data::parse_timestamp(from)) + k;
  if (!to.empty()) targets.end = std::min(series.length(), series.lower_index(data::parse_timestamp(to) + 1) + k);
  const train::Predictions p = app::predict_with_checkpoint(c, series, targets);
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / ("predictions_h" + std::to_string(k) + ".csv")).string();
  auto out = data::csv::open_out(path);
  app::write_predictions(out, series, p);
  std::cout << "wrote " << p.samples.size() << " anchors to " << path << '\n';
  return kOk;
}

// ---- evaluate ----------------------------------------------------------------

int cmd_evaluate(const std::string& predictions, std::size_t horizon, const std::string& out_dir) {
  auto in = data::csv::open_in(predictions);
  const train::Metrics m = app::prediction_metrics(app::read_predictions(in, predictions));
  const std::string json = app::metrics_json(horizon, m);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    app::write_text((fs::path(out_dir) / ("metrics_h" + std::to_string(horizon) + ".json")).string(),
                    json + "\n");
  }
  std::cout << json << '\n';
  return kOk;
}

app::RunConfig load_config(const std::string& path, std::optional<std::size_t> horizon,
                           std::optional<std::uint64_t> seed, const std::string& out) {
  app::RunConfig cfg = app::load_run_config(path);
  if (horizon) {
    if (*horizon < 1) throw ConfigError("--horizon must be >= 1");
    cfg.horizons = {*horizon};
  }
  if (seed) cfg.train.seed = *seed;
  if (!out.empty()) cfg.output_dir = fs::absolute(out).lexically_normal().string();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Spatio-temporal hybrid graph convolution traffic forecaster"};
  cli.require_subcommand(1);

  std::string config, out, checkpoint, traffic, from, to, predictions;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> seed;
  synth::SynthSpec spec;

  auto* synth_cmd = cli.add_subcommand("synth", "generate a planted-structure dataset and config");
  synth_cmd->add_option("--out", out, "output directory")->required();
  synth_cmd->add_option("--seed", spec.seed, "generator seed");
  synth_cmd->add_option("--nodes", spec.nodes, "number of stations");
  synth_cmd->add_option("--weeks", spec.weeks, "number of weeks");
  synth_cmd->add_option("--granularity", spec.granularity, "minutes between points");
  synth_cmd->add_option("--mixing", spec.mixing, "spatial mixing coefficient");
  synth_cmd->add_option("--noise", spec.noise_fraction, "noise std relative to the daily amplitude");

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "run configuration (JSON)")->required();
    cmd->add_option("--horizon", horizon, "run a single horizon k");
    cmd->add_option("--seed", seed, "training seed");
    cmd->add_option("--out", out, "output directory (overrides the config)");
  };
  auto* ingest_cmd = cli.add_subcommand("ingest-check", "load and validate the inputs");
  add_run_flags(ingest_cmd);
  auto* graphs_cmd = cli.add_subcommand("graphs", "export graphs and the PCC timeline");
  add_run_flags(graphs_cmd);
  auto* train_cmd = cli.add_subcommand("train", "train one model per horizon");
  add_run_flags(train_cmd);

  auto* predict_cmd = cli.add_subcommand("predict", "predict with a saved checkpoint");
  predict_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict_cmd->add_option("--traffic", traffic, "traffic CSV")->required();
  predict_cmd->add_option("--from", from, "first anchor timestamp (YYYY-MM-DD HH:MM:SS)");
  predict_cmd->add_option("--to", to, "last anchor timestamp");
  predict_cmd->add_option("--out", out, "output directory (default: current directory)");

  auto* eval_cmd = cli.add_subcommand("evaluate", "RMSE and MAE of a predictions file");
  eval_cmd->add_option("--predictions", predictions, "predictions CSV")->required();
  eval_cmd->add_option("--horizon", horizon, "horizon recorded in the output")->required();
  eval_cmd->add_option("--out", out, "also write metrics_h<k>.json here");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth_cmd) return cmd_synth(spec, out);
    if (*ingest_cmd) return cmd_ingest_check(load_config(config, horizon, seed, out));
    if (*graphs_cmd) return cmd_graphs(load_config(config, horizon, seed, out));
    if (*train_cmd) return cmd_train(load_config(config, horizon, seed, out));
    if (*predict_cmd) return cmd_predict(checkpoint, traffic, from, to, out.empty() ? "." : out);
    if (*eval_cmd) return cmd_evaluate(predictions, *horizon, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
