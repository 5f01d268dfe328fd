#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "transit/api.hpp"
#include "transit/config.hpp"
#include "transit/pipeline.hpp"
#include "transit/store.hpp"
#include "transit/synth.hpp"

namespace fs = std::filesystem;
using namespace transit;

namespace {

struct StoreArgs {
  std::string store = "store";
  std::string config;

  fs::path root() const {
    if (auto const* env = std::getenv("TRANSIT_STORE"); env != nullptr && *env != '\0') {
      return env;
    }
    return store;
  }

  Config load_config() const {
    if (!config.empty()) {
      return Config::load(config);
    }
    auto const in_store = root() / "config.json";
    if (fs::exists(in_store)) {
      return Config::load(in_store);
    }
    return Config{};
  }
};

void add_store_options(CLI::App* cmd, StoreArgs& args, bool with_config = true) {
  cmd->add_option("--store", args.store, "store directory (TRANSIT_STORE overrides)");
  if (with_config) {
    cmd->add_option("--config", args.config, "JSON config file");
  }
}

void print(nlohmann::ordered_json const& j) { std::cout << j.dump(2) << '\n'; }

nlohmann::ordered_json ingest_summary_json(GpsIngestSummary const& s) {
  nlohmann::ordered_json rejected = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.rejections.size() && i < 20; ++i) {
    rejected.push_back({{"line", s.rejections[i].line},
                        {"reason", s.rejections[i].reason}});
  }
  return {{"data_rows", s.data_rows},
          {"accepted", s.accepted},
          {"rejected", s.rejections.size()},
          {"partitions", s.partitions},
          {"time_format", s.time_format == TimeFormat::epoch_seconds
                              ? "epoch_seconds"
                              : "local_datetime"},
          {"first_rejections", rejected}};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bus service reliability analytics from raw GPS and schedules"};
  app.require_subcommand(1);

  StoreArgs sa;
  std::string input;
  std::string date;
  std::string date_range;
  std::string route;
  unsigned workers = 0;

  auto* ingest_gps_cmd = app.add_subcommand("ingest-gps", "ingest a GPS CSV feed");
  ingest_gps_cmd->add_option("--in", input, "GPS CSV file")->required();
  add_store_options(ingest_gps_cmd, sa);

  auto* ingest_sched_cmd =
      app.add_subcommand("ingest-schedule", "ingest a flattened schedule CSV");
  ingest_sched_cmd->add_option("--in", input, "schedule CSV file")->required();
  add_store_options(ingest_sched_cmd, sa, false);

  auto* pre_cmd = app.add_subcommand("preprocess", "recover directed runs");
  auto* est_cmd = app.add_subcommand("estimate", "estimate stop arrivals");
  for (auto* cmd : {pre_cmd, est_cmd}) {
    add_store_options(cmd, sa);
    cmd->add_option("--date", date, "partition date YYYY-MM-DD");
    cmd->add_option("--route", route, "route id");
    cmd->add_option("--workers", workers, "worker threads (0 = all cores)");
  }

  auto* analyze_cmd = app.add_subcommand("analyze", "aggregate reliability metrics");
  auto* run_cmd = app.add_subcommand("run", "preprocess, estimate and analyze");
  for (auto* cmd : {analyze_cmd, run_cmd}) {
    add_store_options(cmd, sa);
    cmd->add_option("--date-range", date_range, "A..B, A.., ..B or a single date");
    cmd->add_option("--route", route, "route id");
    cmd->add_option("--workers", workers, "worker threads (0 = all cores)");
  }

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "serve analytics over HTTP");
  add_store_options(serve_cmd, sa, false);
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--host", host, "bind address");

  synth::Scenario sc;
  std::string out;
  bool no_truth = false;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scenario");
  synth_cmd->add_option("--seed", sc.seed, "RNG seed");
  synth_cmd->add_option("--routes", sc.n_routes, "number of routes");
  synth_cmd->add_option("--stops", sc.stops_per_route, "stops per route");
  synth_cmd->add_option("--trips", sc.trips_per_day, "trips per route per day");
  synth_cmd->add_option("--days", sc.days, "number of service days");
  synth_cmd->add_option("--interval", sc.gps_interval_s, "GPS ping interval in seconds");
  synth_cmd->add_option("--speed-noise", sc.speed_noise_pct, "segment speed noise, percent");
  synth_cmd->add_option("--delay-mean", sc.delay_mean_s, "mean dispatch delay, seconds");
  synth_cmd->add_option("--delay-sd", sc.delay_sd_s, "dispatch delay spread, seconds");
  synth_cmd->add_option("--dropout", sc.dropout_pct, "ping dropout, percent");
  synth_cmd->add_option("--bunch", sc.bunch_pct, "share of trips shadowed, percent");
  synth_cmd->add_option("--start-date", sc.start_date, "first service date");
  synth_cmd->add_option("--timezone", sc.timezone, "IANA time zone");
  synth_cmd->add_flag("--no-truth", no_truth, "skip truth.json");
  synth_cmd->add_option("--out", out, "output directory");

  std::string oracle_in;
  std::string oracle_out;
  std::string oracle_config;
  auto* oracle_cmd = synth_cmd->add_subcommand("oracle", "metrics straight from truth.json");
  oracle_cmd->add_option("--in", oracle_in, "directory holding truth.json")->required();
  oracle_cmd->add_option("--out", oracle_out, "output JSON file")->required();
  oracle_cmd->add_option("--config", oracle_config, "JSON config for the on-time window");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineOptions opts;
    opts.workers = workers;
    if (!route.empty()) {
      opts.route = route;
    }

    if (*ingest_gps_cmd) {
      StoreLock const lock{sa.root(), true};
      auto const config = sa.load_config();
      Store const store{sa.root()};
      auto const s = ingest_gps_file(store, input, config);
      print(ingest_summary_json(s));
    } else if (*ingest_sched_cmd) {
      StoreLock const lock{sa.root(), true};
      Store const store{sa.root()};
      auto const schedule = ingest_schedule_file(store, input);
      print({{"routes", schedule.routes.size()},
             {"trips", schedule.trip_count()},
             {"stops", schedule.stops.size()},
             {"stop_route_pairs", schedule.stop_route_pairs()}});
    } else if (*pre_cmd || *est_cmd) {
      StoreLock const lock{sa.root(), true};
      auto const config = sa.load_config();
      Store const store{sa.root()};
      if (!date.empty()) {
        opts.range = DateRange::parse(date);
      }
      auto const report = *pre_cmd ? run_preprocess(store, config, opts)
                                   : run_estimate(store, config, opts);
      print(report.to_json());
      return report.failures.empty() ? 0 : 1;
    } else if (*analyze_cmd || *run_cmd) {
      StoreLock const lock{sa.root(), true};
      auto const config = sa.load_config();
      Store const store{sa.root()};
      if (!date_range.empty()) {
        opts.range = DateRange::parse(date_range);
      }
      auto const report = *run_cmd ? run_pipeline(store, config, opts)
                                   : run_analyze(store, config, opts);
      print(report.to_json());
      return report.failures.empty() ? 0 : 1;
    } else if (*serve_cmd) {
      Store const store{sa.root()};
      std::cerr << "serving " << store.root().string() << " on http://" << host
                << ':' << port << "/api/\n";
      serve(store, host, port);
    } else if (*oracle_cmd) {
      auto const truth = synth::GroundTruth::from_json(
          nlohmann::ordered_json::parse(read_file(fs::path{oracle_in} / "truth.json")));
      auto const config =
          oracle_config.empty() ? Config{} : Config::load(oracle_config);
      OnTimeWindow const w{config.metrics.early_s, config.metrics.late_s};
      write_file(oracle_out, synth::oracle_metrics(truth, w).to_json().dump(2) + "\n");
    } else if (*synth_cmd) {
      if (out.empty()) {
        std::cerr << "synth: --out is required\n";
        return 2;
      }
      sc.write_truth = !no_truth;
      auto const g = synth::generate(sc);
      synth::write_generated(g, sc, out);
      print({{"out", out},
             {"gps_records", g.gps_records},
             {"runs", g.truth.runs.size()},
             {"trips", g.truth.trips.size()}});
    }
  } catch (std::exception const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
