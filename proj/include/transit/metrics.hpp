#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transit/core.hpp"
#include "transit/estimate.hpp"

namespace transit {

/// [scheduled - early_s, scheduled + late_s], both ends inclusive.
struct OnTimeWindow {
  std::int64_t early_s = 60;
  std::int64_t late_s = 300;

  bool contains(EpochSeconds scheduled, EpochSeconds arrival) const {
    return arrival >= scheduled - early_s && arrival <= scheduled + late_s;
  }
};

bool is_on_time(EpochSeconds scheduled, std::span<EpochSeconds const> arrivals,
                OnTimeWindow const& w = {});

/// arrivals must already hold one entry per distinct bus.
std::size_t arrivals_in_window(EpochSeconds scheduled,
                               std::span<EpochSeconds const> arrivals,
                               OnTimeWindow const& w = {});

/// Two or more distinct buses inside the slot's window.
bool is_bunching(EpochSeconds scheduled, std::span<EpochSeconds const> arrivals,
                 OnTimeWindow const& w = {});

/// Smallest non-negative delay; none when every arrival is early.
std::optional<std::int64_t> waiting_time(std::span<std::int64_t const> delays);

struct Deviation {
  double mean_s{};
  double mean_abs_s{};
};

std::optional<Deviation> deviation(std::span<std::int64_t const> delays);

/// One scheduled stop-time on one service date.
struct Slot {
  ServiceDate service_date;
  std::string route;
  std::string stop_id;
  std::string trip;
  int seq{};
  ServiceTime scheduled_time;
  EpochSeconds scheduled{};
  int hour{};  // local clock hour of the scheduled time
  std::vector<EpochSeconds> arrivals;  // one per distinct run
  bool missed{};
};

/// Groups interpolated estimates into slots, one arrival per run. Only
/// primary matches are used unless include_all_candidates is set.
std::vector<Slot> build_slots(std::span<ArrivalEstimate const> estimates,
                              TimeContext const& tz,
                              bool include_all_candidates = false);

struct SlotOutcome {
  ServiceDate service_date;
  std::string route;
  std::string stop_id;
  std::string trip;
  int seq{};
  ServiceTime scheduled_time;
  int hour{};
  bool missed{};
  bool on_time{};
  bool bunching{};
  std::optional<std::int64_t> waiting_s;
  std::vector<std::int64_t> delays;
};

SlotOutcome evaluate_slot(Slot const& slot, OnTimeWindow const& w = {});

/// Percentage of on-time slots among observed and missed ones; none for an
/// empty group.
std::optional<double> reliability(std::span<SlotOutcome const> outcomes);

enum class ScopeKind { system, route, stop, trip };
enum class BucketKind { all, hour_of_day, day_of_week, month };

char const* to_string(ScopeKind k);
char const* to_string(BucketKind k);

struct Scope {
  ScopeKind kind = ScopeKind::system;
  std::string route;
  std::string stop;
  std::string trip;

  friend auto operator<=>(Scope const&, Scope const&) = default;
};

struct Bucket {
  BucketKind kind = BucketKind::all;
  int value{};  // hour 0-23, ISO weekday 1-7, month 1-12

  friend auto operator<=>(Bucket const&, Bucket const&) = default;
};

/// Hour is the local clock hour of the scheduled time (so 25:10 is hour 1);
/// weekday and month come from the service date.
Bucket bucket_of(SlotOutcome const& o, BucketKind kind);

struct MetricCell {
  Scope scope;
  Bucket bucket;
  std::int64_t n_scheduled{};  // observed + missed
  std::int64_t n_observed{};
  std::int64_t n_missed{};
  std::int64_t n_on_time{};
  std::int64_t n_bunching{};
  std::int64_t n_arrivals{};
  std::int64_t sum_delay_s{};
  std::int64_t sum_abs_delay_s{};
  std::int64_t n_waiting{};
  std::int64_t sum_waiting_s{};

  double reliability_pct() const;
  std::optional<double> reliability_observed_pct() const;
  double bunching_pct() const;
  std::optional<double> deviation_mean_s() const;
  std::optional<double> deviation_mean_abs_s() const;
  std::optional<double> waiting_mean_s() const;

  void add(SlotOutcome const& o);
  void merge(MetricCell const& o);
};

struct AggregateOptions {
  bool all = true;
  bool hour_of_day = true;
  bool day_of_week = true;
  bool month = true;
};

/// One cell per (scope, bucket) holding at least one slot, for all
/// four scope levels. Sorted by scope then bucket.
std::vector<MetricCell> compute_cells(std::span<SlotOutcome const> outcomes,
                                      AggregateOptions const& options = {});

/// Cells of a single bucket dimension.
std::vector<MetricCell> aggregate(std::span<SlotOutcome const> outcomes,
                                  BucketKind dimension);

/// Fixed-order JSON object for a cell.
std::string cell_to_json(MetricCell const& c);

} // namespace transit
