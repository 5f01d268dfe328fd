#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "transit/core.hpp"
#include "transit/metrics.hpp"

namespace transit::synth {

/// mt19937_64 with conversions written out so draws do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_{seed} {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [lo, hi] by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  /// Irwin-Hall sum of twelve uniforms, minus six.
  double normal();

private:
  std::mt19937_64 engine_;
};

struct Scenario {
  std::uint64_t seed = 42;
  int n_routes = 3;
  int stops_per_route = 20;
  int trips_per_day = 30;  // per route, alternating directions
  int days = 2;
  std::int64_t gps_interval_s = 180;
  double speed_noise_pct = 0.0;
  double delay_mean_s = 0.0;
  double delay_sd_s = 0.0;
  double dropout_pct = 0.0;
  double bunch_pct = 0.0;  // share of trips shadowed by a second bus
  std::string start_date = "2017-12-04";
  std::string timezone = "America/Los_Angeles";
  int min_run_records = 5;
  bool write_truth = true;

  static constexpr double kSpeedMps = 8.0;
  static constexpr std::int64_t kMinSegmentS = 51;
  static constexpr std::int64_t kMaxSegmentS = 99;
  static constexpr std::int64_t kMinLayoverS = 900;
  static constexpr std::int64_t kServiceStartS = 6 * 3600;
  static constexpr std::int64_t kServiceEndS = 22 * 3600;
  static constexpr std::int64_t kDelayMinS = -240;
  static constexpr std::int64_t kDelayMaxS = 540;
  static constexpr std::int64_t kBunchOffsetS = 60;

  /// Throws validation_error on out-of-range parameters.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static Scenario from_json(nlohmann::ordered_json const& j);
};

struct TruthArrival {
  int seq{};
  std::string stop_id;
  EpochSeconds time{};
  bool observable{};
};

/// One dispatched vehicle trip.
struct TruthRun {
  std::string route;
  std::string bus_id;
  std::string run_id;
  std::string trip;
  std::string service_date;
  std::string direction;  // "forward" or "reverse"
  EpochSeconds depart{};
  EpochSeconds arrive{};
  int progress_pings{};  // surviving pings off the origin stop
  int run_pings{};       // pings expected in the recovered run
  bool recovered{};
  std::vector<TruthArrival> arrivals;
};

struct TruthStopTime {
  int seq{};
  std::string stop_id;
  std::int32_t service_s{};
  EpochSeconds scheduled{};
};

/// One scheduled trip on one service date.
struct TruthTrip {
  std::string route;
  std::string trip;
  std::string service_date;
  std::string direction;
  std::vector<TruthStopTime> stop_times;
};

struct GroundTruth {
  std::string timezone;
  std::vector<TruthTrip> trips;
  std::vector<TruthRun> runs;

  nlohmann::ordered_json to_json() const;
  static GroundTruth from_json(nlohmann::ordered_json const& j);
};

struct Generated {
  std::string schedule_csv;
  std::string gps_csv;
  GroundTruth truth;
  std::size_t gps_records{};
};

Generated generate(Scenario const& scenario);

/// Writes schedule.csv, gps.csv, scenario.json and (optionally) truth.json.
void write_generated(Generated const& g, Scenario const& scenario,
                     std::filesystem::path const& dir);

struct OracleSlot {
  std::string route;
  std::string stop_id;
  std::string trip;
  std::string service_date;
  int seq{};
  bool missed{};
  bool on_time{};
  bool bunching{};
  std::optional<std::int64_t> waiting_s;
  std::vector<std::int64_t> delays;
};

struct OracleCell {
  std::string scope;   // system, route, stop, trip
  std::string route;
  std::string stop;
  std::string trip;
  std::string bucket;  // all, hour_of_day, day_of_week, month
  int value{};
  std::int64_t n_scheduled{};
  std::int64_t n_on_time{};
  std::int64_t n_bunching{};
  double reliability_pct{};
  double bunching_pct{};
  std::optional<double> deviation_mean_s;
  std::optional<double> deviation_mean_abs_s;
  std::optional<double> waiting_mean_s;
};

struct OracleResult {
  std::vector<OracleSlot> slots;
  std::vector<OracleCell> cells;

  nlohmann::ordered_json to_json() const;
};

/// Evaluates every metric straight from ground-truth arrivals.
OracleResult oracle_metrics(GroundTruth const& truth, OnTimeWindow const& w = {});

} // namespace transit::synth
