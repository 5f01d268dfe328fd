#include <map>
#include <tuple>

#include <gtest/gtest.h>

#include "json.hpp"
#include "support.hpp"
#include "transit/metrics.hpp"

using namespace transit;
using transit::testing::Gen;

namespace {

TimeContext const tz{"America/Los_Angeles"};
auto const monday = parse_date("2017-12-04");

EpochSeconds const eight = 1512403200;  // 2017-12-04 08:00:00 local

std::vector<EpochSeconds> v(std::initializer_list<EpochSeconds> xs) { return xs; }

ArrivalEstimate estimate(std::string trip, int seq, std::string bus, EpochSeconds scheduled,
                         EpochSeconds estimated, bool primary = true) {
  ArrivalEstimate e;
  e.route = "2";
  e.run = RunKey{std::move(bus), "1", estimated - 600};
  e.trip = std::move(trip);
  e.service_date = monday;
  e.is_primary = primary;
  e.seq = seq;
  e.stop_id = "s" + std::to_string(seq);
  e.scheduled = scheduled;
  e.scheduled_time = ServiceTime{static_cast<std::int32_t>(scheduled - (eight - 8 * 3600))};
  e.estimated = estimated;
  e.delay_s = estimated - scheduled;
  e.method = EstimateMethod::interpolated;
  return e;
}

SlotOutcome outcome(bool on_time, std::vector<std::int64_t> delays = {}) {
  SlotOutcome o;
  o.service_date = monday;
  o.route = "2";
  o.stop_id = "s1";
  o.trip = "T";
  o.on_time = on_time;
  o.delays = std::move(delays);
  return o;
}

} // namespace

TEST(on_time, window_examples) {
  EXPECT_TRUE(is_on_time(eight, v({eight})));
  EXPECT_TRUE(is_on_time(eight, v({eight + 300})));
  EXPECT_FALSE(is_on_time(eight, v({eight + 301})));
  EXPECT_TRUE(is_on_time(eight, v({eight - 60})));
  EXPECT_FALSE(is_on_time(eight, v({eight - 61})));
  EXPECT_FALSE(is_on_time(eight, v({})));
  EXPECT_TRUE(is_on_time(eight, v({eight - 500, eight + 100})));
}

TEST(reliability, ratio_of_on_time_slots) {
  std::vector<SlotOutcome> three{outcome(true), outcome(true), outcome(false)};
  EXPECT_NEAR(*reliability(three), 200.0 / 3.0, 1e-9);
  std::vector<SlotOutcome> all{outcome(true), outcome(true)};
  EXPECT_EQ(*reliability(all), 100.0);
  EXPECT_FALSE(reliability({}));
}

TEST(deviation, means) {
  std::vector<std::int64_t> sym{60, -60};
  auto const d = deviation(sym);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->mean_s, 0.0);
  EXPECT_EQ(d->mean_abs_s, 60.0);
  std::vector<std::int64_t> one{120};
  EXPECT_EQ(deviation(one)->mean_s, 120.0);
  EXPECT_EQ(deviation(one)->mean_abs_s, 120.0);
  EXPECT_FALSE(deviation({}));
}

TEST(bunching, two_buses_in_window) {
  EXPECT_TRUE(is_bunching(eight, v({eight + 60, eight + 180})));
  EXPECT_FALSE(is_bunching(eight, v({eight + 60})));
  EXPECT_FALSE(is_bunching(eight, v({eight + 60, eight + 301})));
  EXPECT_EQ(arrivals_in_window(eight, v({eight - 61, eight - 60, eight + 300, eight + 301})), 2U);
}

TEST(bunching, same_run_on_two_candidates_counts_once) {
  std::vector<ArrivalEstimate> es{estimate("T", 1, "bus", eight, eight + 60, true),
                                  estimate("T", 1, "bus", eight, eight + 60, false)};
  auto const slots = build_slots(es, tz, true);
  ASSERT_EQ(slots.size(), 1U);
  EXPECT_EQ(slots[0].arrivals.size(), 1U);
  EXPECT_FALSE(evaluate_slot(slots[0]).bunching);

  es.push_back(estimate("T", 1, "other", eight, eight + 120, true));
  auto const two = build_slots(es, tz, true);
  EXPECT_EQ(two[0].arrivals.size(), 2U);
  EXPECT_TRUE(evaluate_slot(two[0]).bunching);
}

TEST(waiting_time, minimum_non_negative_delay) {
  std::vector<std::int64_t> a{-120, 60, 300};
  EXPECT_EQ(waiting_time(a), 60);
  std::vector<std::int64_t> b{0, 90};
  EXPECT_EQ(waiting_time(b), 0);
  std::vector<std::int64_t> c{-30, -10};
  EXPECT_FALSE(waiting_time(c));
  EXPECT_FALSE(waiting_time({}));
}

TEST(build_slots, primary_only_by_default) {
  std::vector<ArrivalEstimate> es{estimate("T", 1, "a", eight, eight + 10, true),
                                  estimate("U", 1, "a", eight, eight + 10, false)};
  EXPECT_EQ(build_slots(es, tz).size(), 1U);
  EXPECT_EQ(build_slots(es, tz, true).size(), 2U);
  auto unestimated = estimate("T", 2, "a", eight + 60, eight + 60);
  unestimated.method = EstimateMethod::unestimated;
  unestimated.estimated.reset();
  es.push_back(unestimated);
  EXPECT_EQ(build_slots(es, tz).size(), 1U);
}

TEST(buckets, scheduled_time_decides_the_bucket) {
  std::vector<ArrivalEstimate> es{estimate("T", 1, "a", eight + 1800, eight + 1800),
                                  estimate("T", 2, "a", eight + 3000, eight + 3500)};
  auto const slots = build_slots(es, tz);
  std::vector<SlotOutcome> outs;
  for (auto const& s : slots) {
    outs.push_back(evaluate_slot(s));
  }
  auto const cells = aggregate(outs, BucketKind::hour_of_day);
  ASSERT_FALSE(cells.empty());
  for (auto const& c : cells) {
    EXPECT_EQ(c.bucket.value, 8);
  }
}

TEST(buckets, post_midnight_time_keeps_service_day) {
  // 25:10:00 on Monday 2017-12-04 is Tuesday 01:10 local.
  auto const scheduled = tz.resolve(monday, parse_service_time("25:10:00"));
  auto e = estimate("T", 1, "a", scheduled, scheduled);
  e.scheduled_time = parse_service_time("25:10:00");
  std::vector<ArrivalEstimate> es{e};
  auto const slots = build_slots(es, tz);
  ASSERT_EQ(slots.size(), 1U);
  auto const o = evaluate_slot(slots[0]);
  EXPECT_EQ(bucket_of(o, BucketKind::day_of_week).value, 1);
  EXPECT_EQ(bucket_of(o, BucketKind::hour_of_day).value, 1);
  EXPECT_EQ(bucket_of(o, BucketKind::month).value, 12);
}

TEST(metric_cell, missed_slots_count_in_the_denominator) {
  std::vector<SlotOutcome> outs{outcome(true, {10}), outcome(false, {400})};
  auto missed = outcome(false);
  missed.missed = true;
  outs.push_back(missed);
  auto const cells = aggregate(outs, BucketKind::all);
  auto const& system = cells.front();
  EXPECT_EQ(system.scope.kind, ScopeKind::system);
  EXPECT_EQ(system.n_scheduled, 3);
  EXPECT_EQ(system.n_observed, 2);
  EXPECT_EQ(system.n_missed, 1);
  EXPECT_NEAR(system.reliability_pct(), 100.0 / 3.0, 1e-9);
  EXPECT_NEAR(*system.reliability_observed_pct(), 50.0, 1e-9);
  EXPECT_EQ(*system.deviation_mean_s(), 205.0);
}

TEST(metric_cell, json_field_order) {
  MetricCell c;
  c.scope = {ScopeKind::stop, "2", "4756", ""};
  c.bucket = {BucketKind::hour_of_day, 8};
  c.n_scheduled = c.n_observed = 2;
  c.n_on_time = 1;
  c.n_arrivals = 2;
  c.sum_delay_s = 60;
  c.sum_abs_delay_s = 60;
  auto const j = nlohmann::ordered_json::parse(cell_to_json(c));
  std::vector<std::string> keys;
  for (auto const& [k, _] : j.items()) {
    keys.push_back(k);
  }
  EXPECT_EQ(keys, (std::vector<std::string>{
                      "scope", "route", "stop", "bucket", "value", "n_scheduled",
                      "n_observed", "n_missed", "n_on_time", "n_bunching", "n_arrivals",
                      "n_waiting", "reliability_pct", "reliability_observed_pct",
                      "deviation_mean_s", "deviation_mean_abs_s", "bunching_pct",
                      "waiting_mean_s"}));
  EXPECT_EQ(j["reliability_pct"], 50.0);
  EXPECT_TRUE(j["waiting_mean_s"].is_null());
}

namespace {

/// Random slots over a few routes, stops, trips and days.
std::vector<Slot> random_slots(Gen& gen, std::int64_t day_shift = 0) {
  std::vector<Slot> out;
  auto const n = gen.integer(1, 120);
  for (std::int64_t i = 0; i < n; ++i) {
    Slot s;
    auto const day = gen.integer(0, 40);
    s.service_date = monday + day + day_shift;
    s.route = std::to_string(gen.integer(1, 3));
    s.stop_id = "s" + std::to_string(gen.integer(1, 4));
    s.trip = s.route + "-" + std::to_string(gen.integer(1, 3));
    s.seq = static_cast<int>(gen.integer(1, 4));
    s.scheduled_time = ServiceTime{static_cast<std::int32_t>(gen.integer(5 * 3600, 25 * 3600))};
    s.scheduled = tz.resolve(s.service_date, s.scheduled_time);
    s.hour = tz.local_time(s.scheduled).hour();
    s.missed = gen.coin(0.1);
    if (!s.missed) {
      auto const k = gen.integer(1, 3);
      for (std::int64_t j = 0; j < k; ++j) {
        s.arrivals.push_back(s.scheduled + gen.integer(-400, 700));
      }
    }
    out.push_back(s);
  }
  return out;
}

std::vector<SlotOutcome> evaluate_all(std::vector<Slot> const& slots, OnTimeWindow w = {}) {
  std::vector<SlotOutcome> outs;
  for (auto const& s : slots) {
    outs.push_back(evaluate_slot(s, w));
  }
  return outs;
}

} // namespace

TEST(metrics_property, cells_match_brute_force_regrouping) {
  Gen gen{41};
  for (int trial = 0; trial < 200; ++trial) {
    auto const outs = evaluate_all(random_slots(gen));
    // (scope, route, stop, trip, bucket, value) -> (scheduled, on_time, bunching)
    using Key = std::tuple<int, std::string, std::string, std::string, int, int>;
    std::map<Key, std::tuple<std::int64_t, std::int64_t, std::int64_t>> expect;
    for (auto const& o : outs) {
      int const values[4] = {0, o.hour, iso_weekday(o.service_date),
                             static_cast<int>(o.service_date.month())};
      for (int b = 0; b < 4; ++b) {
        for (Key const& k : {Key{0, "", "", "", b, values[b]},
                             Key{1, o.route, "", "", b, values[b]},
                             Key{2, o.route, o.stop_id, "", b, values[b]},
                             Key{3, o.route, o.stop_id, o.trip, b, values[b]}}) {
          auto& [n, on, bunch] = expect[k];
          ++n;
          on += o.on_time;
          bunch += o.bunching;
        }
      }
    }
    auto const cells = compute_cells(outs);
    ASSERT_EQ(cells.size(), expect.size());
    for (auto const& c : cells) {
      Key const k{static_cast<int>(c.scope.kind), c.scope.route, c.scope.stop, c.scope.trip,
                  static_cast<int>(c.bucket.kind), c.bucket.value};
      auto const it = expect.find(k);
      ASSERT_NE(it, expect.end());
      auto const [n, on, bunch] = it->second;
      ASSERT_EQ(c.n_scheduled, n);
      ASSERT_EQ(c.n_on_time, on);
      ASSERT_EQ(c.n_bunching, bunch);
    }
  }
}

TEST(metrics_property, system_total_is_sum_of_routes) {
  Gen gen{42};
  for (int trial = 0; trial < 300; ++trial) {
    auto const outs = evaluate_all(random_slots(gen));
    auto const cells = aggregate(outs, BucketKind::all);
    std::int64_t system = 0;
    std::int64_t routes = 0;
    for (auto const& c : cells) {
      if (c.scope.kind == ScopeKind::system) {
        system += c.n_scheduled;
      } else if (c.scope.kind == ScopeKind::route) {
        routes += c.n_scheduled;
      }
    }
    ASSERT_EQ(system, static_cast<std::int64_t>(outs.size()));
    ASSERT_EQ(system, routes);
  }
}

TEST(metrics_property, whole_day_translation_keeps_rates) {
  for (int trial = 0; trial < 200; ++trial) {
    Gen a{static_cast<std::uint64_t>(1000 + trial)};
    Gen b{static_cast<std::uint64_t>(1000 + trial)};
    auto const base = aggregate(evaluate_all(random_slots(a)), BucketKind::all);
    auto const moved = aggregate(evaluate_all(random_slots(b, 7 * 13)), BucketKind::all);
    ASSERT_EQ(base.size(), moved.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      ASSERT_EQ(base[i].reliability_pct(), moved[i].reliability_pct());
      ASSERT_EQ(base[i].bunching_pct(), moved[i].bunching_pct());
    }
  }
}

TEST(metrics_property, widening_the_window_never_lowers_rates) {
  Gen gen{43};
  for (int trial = 0; trial < 300; ++trial) {
    auto const slots = random_slots(gen);
    OnTimeWindow const narrow{gen.integer(0, 200), gen.integer(0, 400)};
    OnTimeWindow const wide{narrow.early_s + gen.integer(0, 300),
                            narrow.late_s + gen.integer(0, 300)};
    auto const a = aggregate(evaluate_all(slots, narrow), BucketKind::all);
    auto const b = aggregate(evaluate_all(slots, wide), BucketKind::all);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_LE(a[i].reliability_pct(), b[i].reliability_pct());
      ASSERT_LE(a[i].bunching_pct(), b[i].bunching_pct());
    }
  }
}

TEST(metrics_property, cell_value_ranges) {
  Gen gen{44};
  for (int trial = 0; trial < 300; ++trial) {
    for (auto const& c : compute_cells(evaluate_all(random_slots(gen)))) {
      ASSERT_GE(c.n_scheduled, 1);
      ASSERT_GE(c.reliability_pct(), 0.0);
      ASSERT_LE(c.reliability_pct(), 100.0);
      ASSERT_GE(c.bunching_pct(), 0.0);
      ASSERT_LE(c.bunching_pct(), 100.0);
      if (auto const w = c.waiting_mean_s()) {
        ASSERT_GE(*w, 0.0);
      }
      if (auto const d = c.deviation_mean_s()) {
        ASSERT_GE(*c.deviation_mean_abs_s(), std::abs(*d));
      }
    }
  }
}
