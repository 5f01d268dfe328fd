#include "transit/metrics.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <tuple>

#include "transit/text.hpp"

namespace transit {

bool is_on_time(EpochSeconds const scheduled,
                std::span<EpochSeconds const> const arrivals,
                OnTimeWindow const& w) {
  return std::any_of(arrivals.begin(), arrivals.end(),
                     [&](EpochSeconds a) { return w.contains(scheduled, a); });
}

std::size_t arrivals_in_window(EpochSeconds const scheduled,
                               std::span<EpochSeconds const> const arrivals,
                               OnTimeWindow const& w) {
  return static_cast<std::size_t>(
      std::count_if(arrivals.begin(), arrivals.end(),
                    [&](EpochSeconds a) { return w.contains(scheduled, a); }));
}

bool is_bunching(EpochSeconds const scheduled,
                 std::span<EpochSeconds const> const arrivals,
                 OnTimeWindow const& w) {
  return arrivals_in_window(scheduled, arrivals, w) >= 2;
}

std::optional<std::int64_t> waiting_time(
    std::span<std::int64_t const> const delays) {
  std::optional<std::int64_t> best;
  for (auto const d : delays) {
    if (d >= 0 && (!best || d < *best)) {
      best = d;
    }
  }
  return best;
}

std::optional<Deviation> deviation(std::span<std::int64_t const> const delays) {
  if (delays.empty()) {
    return std::nullopt;
  }
  std::int64_t sum = 0;
  std::int64_t sum_abs = 0;
  for (auto const d : delays) {
    sum += d;
    sum_abs += d < 0 ? -d : d;
  }
  auto const n = static_cast<double>(delays.size());
  return Deviation{static_cast<double>(sum) / n,
                   static_cast<double>(sum_abs) / n};
}

std::vector<Slot> build_slots(std::span<ArrivalEstimate const> const estimates,
                              TimeContext const& tz,
                              bool const include_all_candidates) {
  using Key = std::tuple<ServiceDate, std::string_view, std::string_view, int>;
  std::map<Key, std::size_t> index;
  std::vector<Slot> slots;
  // run identities per slot, for deduplication
  std::vector<std::vector<RunKey const*>> seen;

  for (auto const& e : estimates) {
    if (e.method != EstimateMethod::interpolated || !e.estimated) {
      continue;
    }
    if (!e.is_primary && !include_all_candidates) {
      continue;
    }
    Key const key{e.service_date, e.route, e.trip, e.seq};
    auto it = index.find(key);
    if (it == index.end()) {
      Slot s;
      s.service_date = e.service_date;
      s.route = e.route;
      s.stop_id = e.stop_id;
      s.trip = e.trip;
      s.seq = e.seq;
      s.scheduled_time = e.scheduled_time;
      s.scheduled = e.scheduled;
      s.hour = tz.local_time(e.scheduled).hour();
      slots.push_back(std::move(s));
      seen.emplace_back();
      // keys view the estimates, which outlive the map
      it = index.emplace(key, slots.size() - 1).first;
    }
    auto const i = it->second;
    auto& runs = seen[i];
    if (std::any_of(runs.begin(), runs.end(),
                    [&](RunKey const* r) { return *r == e.run; })) {
      continue;
    }
    runs.push_back(&e.run);
    slots[i].arrivals.push_back(*e.estimated);
  }

  std::vector<std::size_t> order(slots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto const& x = slots[a];
    auto const& y = slots[b];
    return std::tie(x.service_date, x.route, x.trip, x.seq) <
           std::tie(y.service_date, y.route, y.trip, y.seq);
  });
  std::vector<Slot> out;
  out.reserve(slots.size());
  for (auto const i : order) {
    std::sort(slots[i].arrivals.begin(), slots[i].arrivals.end());
    out.push_back(std::move(slots[i]));
  }
  return out;
}

SlotOutcome evaluate_slot(Slot const& slot, OnTimeWindow const& w) {
  SlotOutcome o;
  o.service_date = slot.service_date;
  o.route = slot.route;
  o.stop_id = slot.stop_id;
  o.trip = slot.trip;
  o.seq = slot.seq;
  o.scheduled_time = slot.scheduled_time;
  o.hour = slot.hour;
  o.missed = slot.missed || slot.arrivals.empty();
  if (o.missed) {
    return o;
  }
  o.on_time = is_on_time(slot.scheduled, slot.arrivals, w);
  o.bunching = is_bunching(slot.scheduled, slot.arrivals, w);
  o.delays.reserve(slot.arrivals.size());
  for (auto const a : slot.arrivals) {
    o.delays.push_back(a - slot.scheduled);
  }
  o.waiting_s = waiting_time(o.delays);
  return o;
}

std::optional<double> reliability(std::span<SlotOutcome const> const outcomes) {
  if (outcomes.empty()) {
    return std::nullopt;
  }
  auto const on_time = std::count_if(outcomes.begin(), outcomes.end(),
                                     [](SlotOutcome const& o) { return o.on_time; });
  return 100.0 * static_cast<double>(on_time) /
         static_cast<double>(outcomes.size());
}

char const* to_string(ScopeKind const k) {
  switch (k) {
  case ScopeKind::system: return "system";
  case ScopeKind::route: return "route";
  case ScopeKind::stop: return "stop";
  case ScopeKind::trip: return "trip";
  }
  return "?";
}

char const* to_string(BucketKind const k) {
  switch (k) {
  case BucketKind::all: return "all";
  case BucketKind::hour_of_day: return "hour_of_day";
  case BucketKind::day_of_week: return "day_of_week";
  case BucketKind::month: return "month";
  }
  return "?";
}

Bucket bucket_of(SlotOutcome const& o, BucketKind const kind) {
  switch (kind) {
  case BucketKind::all: return {kind, 0};
  case BucketKind::hour_of_day: return {kind, o.hour};
  case BucketKind::day_of_week: return {kind, iso_weekday(o.service_date)};
  case BucketKind::month: return {kind, o.service_date.month()};
  }
  return {};
}

double MetricCell::reliability_pct() const {
  return n_scheduled == 0 ? 0.0
                          : 100.0 * static_cast<double>(n_on_time) /
                                static_cast<double>(n_scheduled);
}

std::optional<double> MetricCell::reliability_observed_pct() const {
  if (n_observed == 0) {
    return std::nullopt;
  }
  return 100.0 * static_cast<double>(n_on_time) / static_cast<double>(n_observed);
}

double MetricCell::bunching_pct() const {
  return n_scheduled == 0 ? 0.0
                          : 100.0 * static_cast<double>(n_bunching) /
                                static_cast<double>(n_scheduled);
}

std::optional<double> MetricCell::deviation_mean_s() const {
  if (n_arrivals == 0) {
    return std::nullopt;
  }
  return static_cast<double>(sum_delay_s) / static_cast<double>(n_arrivals);
}

std::optional<double> MetricCell::deviation_mean_abs_s() const {
  if (n_arrivals == 0) {
    return std::nullopt;
  }
  return static_cast<double>(sum_abs_delay_s) / static_cast<double>(n_arrivals);
}

std::optional<double> MetricCell::waiting_mean_s() const {
  if (n_waiting == 0) {
    return std::nullopt;
  }
  return static_cast<double>(sum_waiting_s) / static_cast<double>(n_waiting);
}

void MetricCell::add(SlotOutcome const& o) {
  ++n_scheduled;
  if (o.missed) {
    ++n_missed;
    return;
  }
  ++n_observed;
  n_on_time += o.on_time;
  n_bunching += o.bunching;
  for (auto const d : o.delays) {
    ++n_arrivals;
    sum_delay_s += d;
    sum_abs_delay_s += d < 0 ? -d : d;
  }
  if (o.waiting_s) {
    ++n_waiting;
    sum_waiting_s += *o.waiting_s;
  }
}

void MetricCell::merge(MetricCell const& o) {
  n_scheduled += o.n_scheduled;
  n_observed += o.n_observed;
  n_missed += o.n_missed;
  n_on_time += o.n_on_time;
  n_bunching += o.n_bunching;
  n_arrivals += o.n_arrivals;
  sum_delay_s += o.sum_delay_s;
  sum_abs_delay_s += o.sum_abs_delay_s;
  n_waiting += o.n_waiting;
  sum_waiting_s += o.sum_waiting_s;
}

namespace {

// Flat slot layout per scope: all, 24 hours, 7 weekdays, 12 months.
constexpr std::size_t kHourBase = 1;
constexpr std::size_t kDowBase = kHourBase + 24;
constexpr std::size_t kMonthBase = kDowBase + 7;
constexpr std::size_t kBucketSlots = kMonthBase + 12;

using BucketArray = std::array<MetricCell, kBucketSlots>;

Bucket bucket_at(std::size_t i) {
  if (i == 0) {
    return {BucketKind::all, 0};
  }
  if (i < kDowBase) {
    return {BucketKind::hour_of_day, static_cast<int>(i - kHourBase)};
  }
  if (i < kMonthBase) {
    return {BucketKind::day_of_week, static_cast<int>(i - kDowBase + 1)};
  }
  return {BucketKind::month, static_cast<int>(i - kMonthBase + 1)};
}

bool wanted(std::size_t i, AggregateOptions const& opt) {
  switch (bucket_at(i).kind) {
  case BucketKind::all: return opt.all;
  case BucketKind::hour_of_day: return opt.hour_of_day;
  case BucketKind::day_of_week: return opt.day_of_week;
  case BucketKind::month: return opt.month;
  }
  return false;
}

void add_to(BucketArray& a, SlotOutcome const& o) {
  a[0].add(o);
  a[kHourBase + static_cast<std::size_t>(((o.hour % 24) + 24) % 24)].add(o);
  a[kDowBase + static_cast<std::size_t>(iso_weekday(o.service_date) - 1)].add(o);
  a[kMonthBase + static_cast<std::size_t>(o.service_date.month() - 1)].add(o);
}

void merge_into(BucketArray& into, BucketArray const& from) {
  for (std::size_t i = 0; i < kBucketSlots; ++i) {
    into[i].merge(from[i]);
  }
}

void flush(BucketArray& a, Scope const& scope, AggregateOptions const& opt,
           std::vector<MetricCell>& out) {
  for (std::size_t i = 0; i < kBucketSlots; ++i) {
    if (a[i].n_scheduled > 0 && wanted(i, opt)) {
      auto cell = a[i];
      cell.scope = scope;
      cell.bucket = bucket_at(i);
      out.push_back(std::move(cell));
    }
    a[i] = MetricCell{};
  }
}

} // namespace

std::vector<MetricCell> compute_cells(std::span<SlotOutcome const> const outcomes,
                                      AggregateOptions const& options) {
  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto const& x = outcomes[a];
    auto const& y = outcomes[b];
    return std::tie(x.route, x.stop_id, x.trip) <
           std::tie(y.route, y.stop_id, y.trip);
  });

  std::vector<MetricCell> system_cells;
  std::vector<MetricCell> route_cells;
  std::vector<MetricCell> stop_cells;
  std::vector<MetricCell> trip_cells;
  BucketArray sys{};
  BucketArray route{};
  BucketArray stop{};
  BucketArray trip{};

  std::size_t i = 0;
  while (i < order.size()) {
    auto const& r0 = outcomes[order[i]];
    while (i < order.size() && outcomes[order[i]].route == r0.route) {
      auto const& s0 = outcomes[order[i]];
      while (i < order.size() && outcomes[order[i]].route == r0.route &&
             outcomes[order[i]].stop_id == s0.stop_id) {
        auto const& t0 = outcomes[order[i]];
        while (i < order.size() && outcomes[order[i]].route == r0.route &&
               outcomes[order[i]].stop_id == s0.stop_id &&
               outcomes[order[i]].trip == t0.trip) {
          add_to(trip, outcomes[order[i]]);
          ++i;
        }
        merge_into(stop, trip);
        flush(trip, Scope{ScopeKind::trip, t0.route, t0.stop_id, t0.trip},
              options, trip_cells);
      }
      merge_into(route, stop);
      flush(stop, Scope{ScopeKind::stop, s0.route, s0.stop_id, {}}, options,
            stop_cells);
    }
    merge_into(sys, route);
    flush(route, Scope{ScopeKind::route, r0.route, {}, {}}, options, route_cells);
  }
  flush(sys, Scope{}, options, system_cells);

  std::vector<MetricCell> out;
  out.reserve(system_cells.size() + route_cells.size() + stop_cells.size() +
              trip_cells.size());
  for (auto* v : {&system_cells, &route_cells, &stop_cells, &trip_cells}) {
    out.insert(out.end(), std::make_move_iterator(v->begin()),
               std::make_move_iterator(v->end()));
  }
  return out;
}

std::vector<MetricCell> aggregate(std::span<SlotOutcome const> const outcomes,
                                  BucketKind const dimension) {
  AggregateOptions opt{false, false, false, false};
  switch (dimension) {
  case BucketKind::all: opt.all = true; break;
  case BucketKind::hour_of_day: opt.hour_of_day = true; break;
  case BucketKind::day_of_week: opt.day_of_week = true; break;
  case BucketKind::month: opt.month = true; break;
  }
  return compute_cells(outcomes, opt);
}

namespace {

void append_opt(std::string& out, std::optional<double> const v) {
  if (v) {
    text::append_double(out, *v);
  } else {
    out += "null";
  }
}

} // namespace

std::string cell_to_json(MetricCell const& c) {
  std::string out;
  out.reserve(384);
  out += "{\"scope\":";
  text::append_json_string(out, to_string(c.scope.kind));
  if (c.scope.kind != ScopeKind::system) {
    out += ",\"route\":";
    text::append_json_string(out, c.scope.route);
  }
  if (c.scope.kind == ScopeKind::stop || c.scope.kind == ScopeKind::trip) {
    out += ",\"stop\":";
    text::append_json_string(out, c.scope.stop);
  }
  if (c.scope.kind == ScopeKind::trip) {
    out += ",\"trip\":";
    text::append_json_string(out, c.scope.trip);
  }
  out += ",\"bucket\":";
  text::append_json_string(out, to_string(c.bucket.kind));
  if (c.bucket.kind != BucketKind::all) {
    out += ",\"value\":";
    text::append_int(out, c.bucket.value);
  }
  auto const field = [&](char const* name, std::int64_t v) {
    out += ",\"";
    out += name;
    out += "\":";
    text::append_int(out, v);
  };
  field("n_scheduled", c.n_scheduled);
  field("n_observed", c.n_observed);
  field("n_missed", c.n_missed);
  field("n_on_time", c.n_on_time);
  field("n_bunching", c.n_bunching);
  field("n_arrivals", c.n_arrivals);
  field("n_waiting", c.n_waiting);
  out += ",\"reliability_pct\":";
  text::append_double(out, c.reliability_pct());
  out += ",\"reliability_observed_pct\":";
  append_opt(out, c.reliability_observed_pct());
  out += ",\"deviation_mean_s\":";
  append_opt(out, c.deviation_mean_s());
  out += ",\"deviation_mean_abs_s\":";
  append_opt(out, c.deviation_mean_abs_s());
  out += ",\"bunching_pct\":";
  text::append_double(out, c.bunching_pct());
  out += ",\"waiting_mean_s\":";
  append_opt(out, c.waiting_mean_s());
  out += '}';
  return out;
}

} // namespace transit
