#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

using namespace sthgcn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json minimal_config() {
  return json::parse(R"({
    "data": {"traffic": "traffic.csv", "stations": "stations.csv"},
    "split": {"train_end": "2024-01-20", "val_end": "2024-01-25"},
    "horizons": [1]
  })");
}

std::string config_error(const json& j) {
  try {
    app::parse_run_config(j, fs::path("/data"), false);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sthgcn_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Standard output goes to `log`, standard error next to it.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + STHGCN_CLI + "\" " + args + " > \"" + log.string() +
                          "\" 2> \"" + log.string() + ".err\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, MinimalConfigResolvesPathsAndDefaults) {
  const app::RunConfig c = app::parse_run_config(minimal_config(), fs::path("/data"), false);
  EXPECT_EQ(c.traffic, "/data/traffic.csv");
  EXPECT_EQ(c.stations, "/data/stations.csv");
  EXPECT_EQ(c.horizons, std::vector<std::size_t>{1});
  EXPECT_EQ(c.scaler, data::ScalerMode::global);
  EXPECT_EQ(c.cheb_order, 3u);
  EXPECT_EQ(c.train.lr0, 1e-3);
}

TEST(Config, UnknownKeysAreReportedWithTheirPath) {
  json j = minimal_config();
  j["train"] = {{"epoch", 3}};
  EXPECT_NE(config_error(j).find("train.epoch"), std::string::npos);
  j = minimal_config();
  j["extra"] = 1;
  EXPECT_NE(config_error(j).find("extra"), std::string::npos);
}

TEST(Config, MissingAndInvalidValues) {
  json j = minimal_config();
  j["data"].erase("traffic");
  EXPECT_NE(config_error(j).find("data.traffic"), std::string::npos);

  j = minimal_config();
  j["scaler"] = "robust";
  EXPECT_NE(config_error(j).find("scaler"), std::string::npos);

  j = minimal_config();
  j["split"]["val_end"] = "2024-01-10";
  EXPECT_NE(config_error(j).find("split"), std::string::npos);

  j = minimal_config();
  j["data"].erase("stations");
  EXPECT_NE(config_error(j).find("data.stations"), std::string::npos);
  j["graphs"] = {{"spatial", {{"enabled", false}}}};
  EXPECT_EQ(config_error(j), "");

  j = minimal_config();
  j["graphs"] = {{"spatial", {{"enabled", false}}}, {"functional", {{"enabled", false}}},
                 {"recent_trend", {{"enabled", false}}}};
  EXPECT_NE(config_error(j), "");

  j = minimal_config();
  j["train"] = {{"decay", 0.0}};
  EXPECT_NE(config_error(j), "");
}

TEST(Config, MissingFilesAreCheckedOnRequest) {
  const fs::path dir = scratch("config_files");
  EXPECT_THROW(app::parse_run_config(minimal_config(), dir, true), ConfigError);
  EXPECT_NO_THROW(app::parse_run_config(minimal_config(), dir, false));
  EXPECT_THROW(app::load_run_config((dir / "absent.json").string()), ConfigError);
  app::write_text((dir / "broken.json").string(), "{ not json");
  EXPECT_THROW(app::load_run_config((dir / "broken.json").string()), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  json j = minimal_config();
  j["scaler"] = "per_node";
  j["model"] = {{"cheb_order", 2}, {"conv_channels", 16}, {"hidden", 8}};
  j["train"] = {{"epochs", 7}, {"seed", 11}, {"lr0", 0.002}};
  j["graphs"] = {{"recent_trend", {{"history", 24}, {"keep", 0.8}}}};
  const app::RunConfig a = app::parse_run_config(j, fs::path("/data"), false);
  const auto written = app::run_config_json(a);
  const app::RunConfig b = app::parse_run_config(written, fs::path("/elsewhere"), false);
  EXPECT_EQ(app::run_config_json(b), written);
  EXPECT_EQ(b.train.epochs, 7u);
  EXPECT_EQ(b.graphs.history, 24u);
  EXPECT_EQ(b.scaler, data::ScalerMode::per_node);
}

TEST(Synth, NoiselessUnmixedSeriesIsWeeklyPeriodic) {
  synth::SynthSpec spec;
  spec.nodes = 6;
  spec.weeks = 2;
  spec.granularity = 60;
  spec.noise_fraction = 0.0;
  spec.mixing = 0.0;
  const synth::SynthData d = synth::generate(spec);
  ASSERT_EQ(d.series.length(), 2u * 168);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t t = 0; t < 168; ++t) EXPECT_NEAR(d.series(i, t), d.series(i, t + 168), 1e-9);
  EXPECT_EQ(d.series.granularity(), 60);
  EXPECT_EQ(d.stations.size(), 6u);
}

TEST(Synth, PlantedStructure) {
  const synth::SynthData d = synth::generate(synth::SynthSpec{});
  EXPECT_EQ(d.series.stations(), 20u);
  EXPECT_EQ(d.series.length(), 8u * 7 * 96);
  EXPECT_EQ(d.same_cluster.edge_count(), 90u);
  for (auto [i, j] : d.neighbors.edges()) {
    EXPECT_NE(d.cluster[i], d.cluster[j]);
    // Grid neighbors sit about one spacing apart.
    const auto& a = d.stations[i];
    const auto& b = d.stations[j];
    const double m = graph::haversine(a.latitude, a.longitude, b.latitude, b.longitude);
    EXPECT_GT(m, 50.0);
    EXPECT_LT(m, 160.0);
  }
  EXPECT_EQ(synth::generate(synth::SynthSpec{}).series.values(), d.series.values());
}

TEST(Synth, FunctionalGraphRecoversTheClusters) {
  const synth::SynthData d = synth::generate(synth::SynthSpec{});
  // Keeping 90 of the 190 pairs should give back exactly the same-cluster pairs.
  const auto g = graph::build_functional_similarity(d.series, 0, d.series.length(), 1.0 - 90.0 / 190.0);
  EXPECT_EQ(g, d.same_cluster);
}

TEST(Synth, RejectsBadSpecs) {
  synth::SynthSpec spec;
  spec.granularity = 7;
  EXPECT_THROW(synth::generate(spec), ConfigError);
  spec = {};
  spec.noise_ar = 1.0;
  EXPECT_THROW(synth::generate(spec), ConfigError);
}

TEST(Predictions, ReaderRejectsMalformedFiles) {
  std::istringstream bad_header("a,b,c,d\n");
  EXPECT_THROW(app::read_predictions(bad_header, "p"), InputError);
  std::istringstream empty("timestamp,station_id,y_true,y_pred\n");
  EXPECT_THROW(app::read_predictions(empty, "p"), EmptyDatasetError);
  std::istringstream short_row("timestamp,station_id,y_true,y_pred\n2024-01-01 00:00:00,S1,1\n");
  EXPECT_THROW(app::read_predictions(short_row, "p"), InputError);
  std::istringstream ok("timestamp,station_id,y_true,y_pred\n2024-01-01 00:00:00,S1,3,0\n"
                        "2024-01-01 00:00:00,S2,4,0\n");
  const auto m = app::prediction_metrics(app::read_predictions(ok, "p"));
  EXPECT_NEAR(m.rmse, std::sqrt(12.5), 1e-15);
  EXPECT_EQ(m.mae, 3.5);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli_codes");
  const fs::path log = dir / "log.txt";
  EXPECT_EQ(run_cli("no-such-command", log), 2);
  EXPECT_EQ(run_cli("train", log), 2);
  EXPECT_EQ(run_cli("train --config \"" + (dir / "absent.json").string() + "\"", log), 2);

  // Three weeks leave one training week, shorter than the weekly lag.
  ASSERT_EQ(run_cli("synth --out \"" + dir.string() + "\" --nodes 4 --weeks 3 --granularity 60", log), 0)
      << slurp(log);
  EXPECT_EQ(run_cli("ingest-check --config \"" + (dir / "config.json").string() + "\"", log), 3);
  ASSERT_EQ(run_cli("synth --out \"" + dir.string() + "\" --nodes 4 --weeks 4 --granularity 60", log), 0)
      << slurp(log);
  EXPECT_EQ(run_cli("ingest-check --config \"" + (dir / "config.json").string() + "\"", log), 0)
      << slurp(log.string() + ".err");

  app::write_text((dir / "traffic.csv").string(), "timestamp,S00\n2024-01-01 00:00:00,abc\n");
  EXPECT_EQ(run_cli("ingest-check --config \"" + (dir / "config.json").string() + "\"", log), 3) << slurp(log);

  json cfg = json::parse(slurp(dir / "config.json"));
  cfg["train"]["epoch"] = 1;
  std::ofstream(dir / "typo.json") << cfg.dump();
  EXPECT_EQ(run_cli("train --config \"" + (dir / "typo.json").string() + "\"", log), 2);
  EXPECT_NE(slurp(log.string() + ".err").find("train.epoch"), std::string::npos);
}

TEST(Cli, TrainPredictEvaluateRoundTrip) {
  const fs::path dir = scratch("cli_run");
  const fs::path log = dir / "log.txt";
  ASSERT_EQ(run_cli("synth --out \"" + dir.string() + "\" --nodes 4 --weeks 4 --granularity 60", log), 0)
      << slurp(log);
  json cfg = json::parse(slurp(dir / "config.json"));
  cfg["train"]["epochs"] = 1;
  cfg["model"] = {{"cheb_order", 2}, {"conv_channels", 4}, {"hidden", 3}};
  cfg["horizons"] = {2};
  std::ofstream(dir / "small.json") << cfg.dump(2);

  ASSERT_EQ(run_cli("train --config \"" + (dir / "small.json").string() + "\"", log), 0) << slurp(log);
  const fs::path out = fs::path(app::load_run_config((dir / "small.json").string()).output_dir);
  for (const char* f : {"train_log_h2.csv", "metrics_h2.json", "baselines_h2.json", "predictions_h2.csv",
                        "checkpoint_h2.json"})
    EXPECT_TRUE(fs::is_regular_file(out / f)) << f;

  const json trained = json::parse(slurp(out / "metrics_h2.json"));
  ASSERT_EQ(run_cli("evaluate --predictions \"" + (out / "predictions_h2.csv").string() + "\" --horizon 2",
                    log),
            0)
      << slurp(log);
  const json evaluated = json::parse(slurp(log));
  EXPECT_EQ(evaluated["horizon_steps"], 2);
  EXPECT_NEAR(evaluated["rmse"].get<double>(), trained["rmse"].get<double>(), 1e-9);
  EXPECT_NEAR(evaluated["mae"].get<double>(), trained["mae"].get<double>(), 1e-9);

  // The checkpoint alone reproduces the test-set predictions.
  const fs::path pred_dir = dir / "pred";
  ASSERT_EQ(run_cli("predict --checkpoint \"" + (out / "checkpoint_h2.json").string() + "\" --traffic \"" +
                        (dir / "traffic.csv").string() + "\" --out \"" + pred_dir.string() + "\"",
                    log),
            0)
      << slurp(log);
  std::ifstream a(out / "predictions_h2.csv"), b(pred_dir / "predictions_h2.csv");
  const auto test_rows = app::read_predictions(a, "test");
  const auto all_rows = app::read_predictions(b, "all");
  ASSERT_GE(all_rows.size(), test_rows.size());
  const std::size_t offset = all_rows.size() - test_rows.size();
  for (std::size_t r = 0; r < test_rows.size(); ++r) {
    EXPECT_EQ(all_rows[offset + r].timestamp, test_rows[r].timestamp);
    EXPECT_EQ(all_rows[offset + r].station_id, test_rows[r].station_id);
    EXPECT_NEAR(all_rows[offset + r].predicted, test_rows[r].predicted, 1e-9);
  }
}
