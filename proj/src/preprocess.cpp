#include "transit/preprocess.hpp"

#include <algorithm>

namespace transit {

char const* to_string(Direction const d) {
  return d == Direction::forward ? "forward" : "reverse";
}

Direction parse_direction(std::string_view const s) {
  if (s == "forward") {
    return Direction::forward;
  }
  if (s == "reverse") {
    return Direction::reverse;
  }
  throw parse_error("bad direction '" + std::string{s} + "'");
}

double cumulative_length_m(ScheduledTrip const& trip) {
  double total = 0.0;
  for (std::size_t i = 1; i < trip.stop_times.size(); ++i) {
    total += haversine_m(trip.stop_times[i - 1].pos, trip.stop_times[i].pos);
  }
  return total;
}

ParentTrip select_parent_trip(std::span<ScheduledTrip const> const trips) {
  if (trips.empty()) {
    throw no_schedule_error("no scheduled trips for route");
  }
  ScheduledTrip const* best = nullptr;
  double best_len = -1.0;
  for (auto const& t : trips) {
    auto const len = cumulative_length_m(t);
    if (best == nullptr || len > best_len ||
        (len == best_len && t.trip < best->trip)) {
      best = &t;
      best_len = len;
    }
  }
  ParentTrip parent{best->route, best->trip, {}, best_len};
  parent.stops.reserve(best->stop_times.size());
  for (auto const& st : best->stop_times) {
    parent.stops.push_back({st.seq, st.pos});
  }
  return parent;
}

NearestStop nearest_stop(ParentTrip const& parent, GeoPoint const& p) {
  NearestStop best{0, parent.stops.front().seq,
                   haversine_m(p, parent.stops.front().pos)};
  for (std::size_t i = 1; i < parent.stops.size(); ++i) {
    auto const d = haversine_m(p, parent.stops[i].pos);
    // stops are in ascending seq, so only a strictly closer stop wins
    if (d < best.dist_m - 1e-9) {
      best = {i, parent.stops[i].seq, d};
    }
  }
  return best;
}

ProgressMapping map_progress(std::span<GpsRecord const> const records,
                             ParentTrip const& parent, double const outlier_m) {
  ProgressMapping out;
  out.records.reserve(records.size());
  for (auto const& r : records) {
    auto const n = nearest_stop(parent, r.pos);
    if (n.dist_m > outlier_m) {
      ++out.outliers;
      continue;
    }
    out.records.push_back(MappedRecord{r, n.seq, n.dist_m, 0, std::nullopt});
  }
  return out;
}

void assign_trends(std::span<MappedRecord> const mapped) {
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    if (i == 0) {
      mapped[i].trend = 0;
      continue;
    }
    auto const diff = mapped[i].seq - mapped[i - 1].seq;
    mapped[i].trend = (diff > 0) - (diff < 0);
  }
}

SplitResult split_runs(std::vector<MappedRecord> mapped,
                       int const min_run_records) {
  SplitResult result;
  auto const n = mapped.size();

  // Zero-fill between agreeing flanks; 0 marks records to drop as idle.
  std::vector<int> filled(n);
  for (std::size_t i = 0; i < n;) {
    if (mapped[i].trend != 0) {
      filled[i] = mapped[i].trend;
      ++i;
      continue;
    }
    auto j = i;
    while (j < n && mapped[j].trend == 0) {
      ++j;
    }
    auto const left = i > 0 ? mapped[i - 1].trend : 0;
    auto const right = j < n ? mapped[j].trend : 0;
    auto const fill = (left != 0 && left == right) ? left : 0;
    for (auto k = i; k < j; ++k) {
      filled[k] = fill;
    }
    i = j;
  }

  auto const emit = [&](std::size_t begin, std::size_t end) {
    auto const size = end - begin;
    if (size < static_cast<std::size_t>(min_run_records)) {
      result.short_dropped += size;
      ++result.short_runs;
      return;
    }
    GpsRun run;
    auto const& first = mapped[begin].rec;
    run.route = first.route;
    run.bus_id = first.bus_id;
    run.run_id = first.run_id;
    run.records.reserve(size);
    for (auto k = begin; k < end; ++k) {
      mapped[k].trend = filled[k];
      run.records.push_back(std::move(mapped[k]));
    }
    result.runs.push_back(std::move(run));
  };

  for (std::size_t i = 0; i < n;) {
    if (filled[i] == 0) {
      ++result.idle_dropped;
      ++i;
      continue;
    }
    auto j = i;
    while (j < n && filled[j] == filled[i]) {
      ++j;
    }
    emit(i, j);
    i = j;
  }
  return result;
}

GpsRun recover_direction(GpsRun run) {
  if (run.records.empty()) {
    throw invariant_error("recover_direction: empty run");
  }
  auto const trend = run.records.front().trend;
  if (trend == 0) {
    throw invariant_error("recover_direction: zero trend in run");
  }
  for (auto const& r : run.records) {
    if (r.trend != trend) {
      throw invariant_error("recover_direction: mixed trends in run");
    }
  }
  auto const dir = trend > 0 ? Direction::forward : Direction::reverse;
  run.direction = dir;
  for (auto& r : run.records) {
    r.dir = dir;
  }
  return run;
}

PreprocessStats& PreprocessStats::operator+=(PreprocessStats const& o) {
  records_in += o.records_in;
  duplicates += o.duplicates;
  outliers += o.outliers;
  idle_dropped += o.idle_dropped;
  short_dropped += o.short_dropped;
  short_runs += o.short_runs;
  runs_forward += o.runs_forward;
  runs_reverse += o.runs_reverse;
  boundary_runs += o.boundary_runs;
  return *this;
}

GroupResult preprocess_group(std::vector<GpsRecord> records,
                             ParentTrip const& parent,
                             PreprocessConfig const& config,
                             TimeContext const& tz) {
  GroupResult out;
  out.stats.records_in = records.size();

  std::sort(records.begin(), records.end(),
            [](GpsRecord const& a, GpsRecord const& b) {
              return std::tie(a.time, a.pos.lat, a.pos.lon) <
                     std::tie(b.time, b.pos.lat, b.pos.lon);
            });
  // Runs need strictly increasing times: keep the first record per second.
  auto const last = std::unique(records.begin(), records.end(),
                                [](GpsRecord const& a, GpsRecord const& b) {
                                  return a.time == b.time;
                                });
  out.stats.duplicates = static_cast<std::size_t>(records.end() - last);
  records.erase(last, records.end());

  auto mapping = map_progress(records, parent, config.outlier_m);
  out.stats.outliers = mapping.outliers;
  assign_trends(mapping.records);
  auto split = split_runs(std::move(mapping.records), config.min_run_records);
  out.stats.idle_dropped = split.idle_dropped;
  out.stats.short_dropped = split.short_dropped;
  out.stats.short_runs = split.short_runs;

  out.runs.reserve(split.runs.size());
  for (auto& r : split.runs) {
    auto run = recover_direction(std::move(r));
    run.service_date = tz.local_date(run.start_time());
    auto const next_midnight =
        tz.from_local(absl::CivilSecond{run.service_date + 1});
    if (run.end_time() >= next_midnight - config.boundary_window_s) {
      ++out.stats.boundary_runs;
    }
    if (*run.direction == Direction::forward) {
      ++out.stats.runs_forward;
    } else {
      ++out.stats.runs_reverse;
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

} // namespace transit
