#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "transit/config.hpp"
#include "transit/ingest.hpp"
#include "transit/synth.hpp"

using namespace transit;
using namespace transit::synth;

namespace {

Scenario small(std::uint64_t seed = 42) {
  Scenario sc;
  sc.seed = seed;
  sc.n_routes = 2;
  sc.stops_per_route = 20;
  sc.trips_per_day = 10;
  sc.days = 1;
  return sc;
}

OracleCell const& system_all(OracleResult const& r) {
  for (auto const& c : r.cells) {
    if (c.scope == "system" && c.bucket == "all") {
      return c;
    }
  }
  throw std::runtime_error("no system cell");
}

struct Vec3 {
  double x, y, z;
};

Vec3 unit(GeoPoint const& p) {
  constexpr double k = 3.14159265358979323846 / 180.0;
  return {std::cos(p.lat * k) * std::cos(p.lon * k), std::cos(p.lat * k) * std::sin(p.lon * k),
          std::sin(p.lat * k)};
}

/// Distance in meters from p to the great circle through a and b.
double cross_track_m(GeoPoint const& a, GeoPoint const& b, GeoPoint const& p) {
  auto const u = unit(a);
  auto const v = unit(b);
  Vec3 n{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
  auto const len = std::sqrt(n.x * n.x + n.y * n.y + n.z * n.z);
  auto const w = unit(p);
  return std::abs(std::asin((n.x * w.x + n.y * w.y + n.z * w.z) / len)) * kEarthRadiusM;
}

} // namespace

TEST(rng, engine_is_standard_mt19937_64) {
  Rng rng{5489};
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) {
    x = rng.next();
  }
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(rng, conversions_stay_in_range) {
  Rng rng{1};
  for (int i = 0; i < 100000; ++i) {
    auto const u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    auto const k = rng.uniform_int(-3, 5);
    ASSERT_GE(k, -3);
    ASSERT_LE(k, 5);
    auto const z = rng.normal();
    ASSERT_GE(z, -6.0);
    ASSERT_LE(z, 6.0);
  }
}

TEST(generate, same_seed_gives_identical_output) {
  auto sc = small();
  sc.dropout_pct = 15;
  sc.delay_sd_s = 90;
  sc.bunch_pct = 30;
  sc.speed_noise_pct = 10;
  auto const a = generate(sc);
  auto const b = generate(sc);
  EXPECT_EQ(a.schedule_csv, b.schedule_csv);
  EXPECT_EQ(a.gps_csv, b.gps_csv);
  EXPECT_EQ(a.truth.to_json().dump(), b.truth.to_json().dump());
  sc.seed = 43;
  EXPECT_NE(generate(sc).gps_csv, a.gps_csv);
}

TEST(generate, golden_seed_7_stream) {
  Scenario sc;
  sc.seed = 7;
  sc.dropout_pct = 10;
  sc.delay_mean_s = 60;
  sc.delay_sd_s = 150;
  sc.bunch_pct = 20;
  auto const g = generate(sc);
  EXPECT_EQ(fnv1a_hex(g.schedule_csv), "ae81872b5a16c925");
  EXPECT_EQ(fnv1a_hex(g.gps_csv), "1519628d078803cf");
  EXPECT_EQ(g.gps_records, 3807U);
  EXPECT_EQ(g.truth.runs.size(), 216U);
  auto const o = oracle_metrics(g.truth);
  auto const& sys = system_all(o);
  EXPECT_EQ(sys.n_scheduled, 2887);
  EXPECT_EQ(sys.n_on_time, 2144);
  EXPECT_EQ(sys.n_bunching, 298);
}

TEST(generate, outputs_parse_with_the_ingest_formats) {
  auto const g = generate(small());
  std::istringstream gps_in(g.gps_csv);
  auto const gps = ingest_gps(gps_in, TimeContext{}, 0.0);
  EXPECT_EQ(gps.records.size(), g.gps_records);
  std::istringstream sched_in(g.schedule_csv);
  auto const schedule = ingest_schedule(sched_in);
  EXPECT_EQ(schedule.routes.size(), 2U);
  EXPECT_EQ(schedule.trip_count(), 20U);
  EXPECT_EQ(schedule.stops.size(), 40U);
  EXPECT_NE(schedule.trips_for("2"), nullptr);
  EXPECT_EQ(schedule.stops.count("4756"), 1U);
}

TEST(generate, noise_free_pings_lie_on_the_route) {
  auto const g = generate(small(9));
  std::istringstream sched_in(g.schedule_csv);
  auto const schedule = ingest_schedule(sched_in);
  std::istringstream gps_in(g.gps_csv);
  auto const gps = ingest_gps(gps_in, TimeContext{}, 0.0);
  for (auto const& rec : gps.records) {
    auto const& stops = schedule.routes.at(rec.route).front().stop_times;
    auto const d = cross_track_m(stops.front().pos, stops.back().pos, rec.pos);
    ASSERT_LT(d, 0.05) << rec.route << " " << rec.time;
  }
}

TEST(generate, stop_spacing_and_truth_order) {
  auto const g = generate(small());
  std::istringstream sched_in(g.schedule_csv);
  auto const schedule = ingest_schedule(sched_in);
  for (auto const& [route, trips] : schedule.routes) {
    auto const& sts = trips.front().stop_times;
    for (std::size_t i = 1; i < sts.size(); ++i) {
      auto const d = haversine_m(sts[i - 1].pos, sts[i].pos);
      EXPECT_GE(d, 400.0);
      EXPECT_LE(d, 800.0);
    }
  }
  for (auto const& run : g.truth.runs) {
    for (std::size_t i = 1; i < run.arrivals.size(); ++i) {
      ASSERT_LT(run.arrivals[i - 1].time, run.arrivals[i].time);
    }
  }
}

TEST(generate, invalid_parameters_are_rejected) {
  auto sc = small();
  sc.n_routes = 0;
  EXPECT_THROW(generate(sc), validation_error);
  sc = small();
  sc.dropout_pct = 100;
  EXPECT_THROW(generate(sc), validation_error);
  sc = small();
  sc.gps_interval_s = 30;
  EXPECT_THROW(generate(sc), validation_error);
  sc = small();
  sc.delay_sd_s = -1;
  EXPECT_THROW(generate(sc), validation_error);
}

TEST(scenario, json_round_trip) {
  auto sc = small(11);
  sc.dropout_pct = 12.5;
  sc.start_date = "2018-01-01";
  auto const back = Scenario::from_json(sc.to_json());
  EXPECT_EQ(back.to_json().dump(), sc.to_json().dump());
}

TEST(oracle, punctual_fleet_is_fully_reliable) {
  auto const o = oracle_metrics(generate(small()).truth);
  auto const& sys = system_all(o);
  EXPECT_GT(sys.n_scheduled, 0);
  EXPECT_EQ(sys.reliability_pct, 100.0);
  EXPECT_EQ(*sys.deviation_mean_s, 0.0);
  EXPECT_EQ(*sys.waiting_mean_s, 0.0);
  EXPECT_EQ(sys.bunching_pct, 0.0);
}

TEST(oracle, uniform_late_offset_inside_window) {
  auto sc = small();
  sc.delay_mean_s = 240;
  auto const o = oracle_metrics(generate(sc).truth);
  auto const& sys = system_all(o);
  EXPECT_EQ(sys.reliability_pct, 100.0);
  EXPECT_EQ(*sys.deviation_mean_s, 240.0);
  EXPECT_EQ(*sys.waiting_mean_s, 240.0);
  sc.delay_mean_s = 301;
  EXPECT_EQ(system_all(oracle_metrics(generate(sc).truth)).reliability_pct, 0.0);
}

TEST(oracle, shadow_bus_sixty_seconds_behind_bunches) {
  auto sc = small();
  sc.bunch_pct = 100;
  auto const o = oracle_metrics(generate(sc).truth);
  std::size_t doubled = 0;
  for (auto const& slot : o.slots) {
    // Near the trip ends only one of the two buses may be bracketed by pings.
    if (slot.delays.size() == 2) {
      ++doubled;
      ASSERT_TRUE(slot.bunching);
      ASSERT_EQ(slot.delays[1] - slot.delays[0], Scenario::kBunchOffsetS);
    } else {
      ASSERT_FALSE(slot.bunching);
    }
  }
  EXPECT_GT(doubled, o.slots.size() / 2);
  EXPECT_GT(system_all(o).bunching_pct, 50.0);
}

TEST(oracle, window_edges_follow_the_delay) {
  auto sc = small();
  for (auto const& [delay, on_time] :
       {std::pair{-60.0, true}, {-61.0, false}, {300.0, true}, {301.0, false}}) {
    sc.delay_mean_s = delay;
    auto const sys = system_all(oracle_metrics(generate(sc).truth));
    EXPECT_EQ(sys.reliability_pct, on_time ? 100.0 : 0.0) << delay;
  }
}
