#include "transit/estimate.hpp"

#include <algorithm>
#include <cmath>

namespace transit {

char const* to_string(EstimateMethod const m) {
  return m == EstimateMethod::interpolated ? "interpolated" : "unestimated";
}

std::vector<ResolvedTrip> find_candidates(
    GpsRun const& run, std::span<ScheduledTrip const> const trips,
    TimeContext const& tz, CandidateOptions const& options) {
  std::vector<ResolvedTrip> out;
  if (run.records.empty()) {
    return out;
  }
  auto const check_direction = !options.trip_directions.empty() &&
                               run.direction.has_value();
  auto const run_start = run.start_time();
  auto const run_end = run.end_time();
  for (auto const offset : {-1, 0}) {
    auto const date = run.service_date + offset;
    auto const base = tz.resolve(date, ServiceTime{0});
    auto const weekday = iso_weekday(date);
    for (std::size_t i = 0; i < trips.size(); ++i) {
      auto const& trip = trips[i];
      if (trip.stop_times.empty()) {
        continue;
      }
      if (check_direction && options.trip_directions[i] &&
          *options.trip_directions[i] != *run.direction) {
        continue;
      }
      auto const start = base + trip.first_time().seconds;
      auto const end = base + trip.last_time().seconds;
      if (start - options.early_slack_s > run_start ||
          end + options.late_slack_s < run_end) {
        continue;
      }
      auto const days = options.service_days.empty() ? trip.service_days()
                                                     : options.service_days[i];
      if (!days.runs_on_weekday(weekday)) {
        continue;
      }
      out.push_back(ResolvedTrip{&trip, date, start, end});
    }
  }
  return out;
}

double score_candidate(GpsRun const& run, ScheduledTrip const& trip) {
  if (run.records.empty() || trip.stop_times.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (auto const& r : run.records) {
    auto best = haversine_m(r.rec.pos, trip.stop_times.front().pos);
    for (std::size_t i = 1; i < trip.stop_times.size(); ++i) {
      best = std::min(best, haversine_m(r.rec.pos, trip.stop_times[i].pos));
    }
    sum += best;
  }
  return sum / static_cast<double>(run.records.size());
}

std::vector<CandidateMatch> filter_candidates(
    std::vector<std::pair<ResolvedTrip, double>> scored, double const margin_m) {
  std::vector<CandidateMatch> out;
  if (scored.empty()) {
    return out;
  }
  auto const by_rank = [](std::pair<ResolvedTrip, double> const& a,
                          std::pair<ResolvedTrip, double> const& b) {
    if (a.second != b.second) {
      return a.second < b.second;
    }
    if (a.first.start != b.first.start) {
      return a.first.start < b.first.start;
    }
    return a.first.trip->trip < b.first.trip->trip;
  };
  std::sort(scored.begin(), scored.end(), by_rank);
  auto const limit = scored.front().second + margin_m;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].second > limit) {
      break;
    }
    out.push_back(CandidateMatch{scored[i].first, scored[i].second, i == 0});
  }
  return out;
}

std::vector<int> parent_seqs(ScheduledTrip const& trip,
                             ParentTrip const& parent) {
  std::vector<int> out;
  out.reserve(trip.stop_times.size());
  for (auto const& st : trip.stop_times) {
    out.push_back(nearest_stop(parent, st.pos).seq);
  }
  return out;
}

std::optional<Direction> trip_direction(std::span<int const> const seqs) {
  if (seqs.size() < 2 || seqs.front() == seqs.back()) {
    return std::nullopt;
  }
  return seqs.back() > seqs.front() ? Direction::forward : Direction::reverse;
}

namespace {

enum class Side { before, at, after };

std::optional<std::size_t> parent_index(ParentTrip const& parent, int seq) {
  auto const it = std::lower_bound(
      parent.stops.begin(), parent.stops.end(), seq,
      [](ParentStop const& s, int v) { return s.seq < v; });
  if (it == parent.stops.end() || it->seq != seq) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - parent.stops.begin());
}

} // namespace

std::vector<ArrivalEstimate> interpolate_arrivals(
    GpsRun const& run, CandidateMatch const& match, ParentTrip const& parent,
    std::span<int const> const stop_parent_seqs, double const at_stop_m) {
  auto const& trip = *match.trip.trip;
  if (stop_parent_seqs.size() != trip.stop_times.size()) {
    throw invariant_error("interpolate_arrivals: stop seq table mismatch");
  }
  auto const dir = run.direction.value_or(Direction::forward);
  auto const sign = dir == Direction::forward ? 1 : -1;
  auto const base = match.trip.start - trip.first_time().seconds;
  auto const& recs = run.records;

  std::vector<ArrivalEstimate> out;
  out.reserve(trip.stop_times.size());
  std::optional<EpochSeconds> previous;

  for (std::size_t k = 0; k < trip.stop_times.size(); ++k) {
    auto const& st = trip.stop_times[k];
    auto const stop_seq = stop_parent_seqs[k];

    ArrivalEstimate e;
    e.route = run.route;
    e.run = RunKey{run.bus_id, run.run_id, run.start_time()};
    e.direction = dir;
    e.trip = trip.trip;
    e.service_date = match.trip.service_date;
    e.is_primary = match.is_primary;
    e.score_m = match.distance_score_m;
    e.seq = st.seq;
    e.stop_id = st.stop;
    e.scheduled_time = st.arrival;
    e.scheduled = base + st.arrival.seconds;

    // Neighbours of the stop along the travel direction, for records that
    // map onto the stop's own seq.
    GeoPoint const* behind = nullptr;
    GeoPoint const* ahead = nullptr;
    if (auto const idx = parent_index(parent, stop_seq)) {
      auto const b = static_cast<std::ptrdiff_t>(*idx) - sign;
      auto const a = static_cast<std::ptrdiff_t>(*idx) + sign;
      auto const n = static_cast<std::ptrdiff_t>(parent.stops.size());
      if (b >= 0 && b < n) {
        behind = &parent.stops[static_cast<std::size_t>(b)].pos;
      }
      if (a >= 0 && a < n) {
        ahead = &parent.stops[static_cast<std::size_t>(a)].pos;
      }
    }

    auto const side = [&](MappedRecord const& r) {
      if (haversine_m(r.rec.pos, st.pos) < at_stop_m) {
        return Side::at;
      }
      auto const rs = r.seq * sign;
      auto const ss = stop_seq * sign;
      if (rs != ss) {
        return rs < ss ? Side::before : Side::after;
      }
      if (behind != nullptr) {
        return haversine_m(r.rec.pos, *behind) < haversine_m(st.pos, *behind)
                   ? Side::before
                   : Side::after;
      }
      if (ahead != nullptr) {
        return haversine_m(r.rec.pos, *ahead) > haversine_m(st.pos, *ahead)
                   ? Side::before
                   : Side::after;
      }
      return Side::at;
    };

    std::optional<double> estimate;
    for (std::size_t b = 0; b < recs.size(); ++b) {
      auto const s = side(recs[b]);
      if (s == Side::before) {
        continue;
      }
      if (s == Side::at) {
        estimate = static_cast<double>(recs[b].rec.time);
      } else if (b > 0) {
        auto const& pa = recs[b - 1];
        auto const& pb = recs[b];
        auto const da = haversine_m(pa.rec.pos, st.pos);
        auto const db = haversine_m(st.pos, pb.rec.pos);
        auto const ta = static_cast<double>(pa.rec.time);
        auto const tb = static_cast<double>(pb.rec.time);
        estimate = (da + db == 0.0) ? ta : ta + (tb - ta) * da / (da + db);
      }
      break;
    }

    if (estimate) {
      auto t = static_cast<EpochSeconds>(std::llround(*estimate));
      if (previous && t < *previous) {
        t = *previous;
      }
      previous = t;
      e.estimated = t;
      e.delay_s = t - e.scheduled;
      e.method = EstimateMethod::interpolated;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ArrivalEstimate> interpolate_arrivals(GpsRun const& run,
                                                  CandidateMatch const& match,
                                                  ParentTrip const& parent,
                                                  double const at_stop_m) {
  auto const seqs = parent_seqs(*match.trip.trip, parent);
  return interpolate_arrivals(run, match, parent, seqs, at_stop_m);
}

RouteIndex::RouteIndex(std::span<ScheduledTrip const> const route_trips)
    : parent{select_parent_trip(route_trips)}, trips{route_trips} {
  stop_parent_seqs.reserve(trips.size());
  directions.reserve(trips.size());
  for (auto const& t : trips) {
    stop_parent_seqs.push_back(parent_seqs(t, parent));
    directions.push_back(trip_direction(stop_parent_seqs.back()));
    service_days.push_back(t.service_days());
  }
}

RunEstimate estimate_run(GpsRun const& run, RouteIndex const& index,
                         EstimateConfig const& config, TimeContext const& tz) {
  CandidateOptions options;
  options.early_slack_s = config.candidate_early_slack_s;
  options.late_slack_s = config.candidate_late_slack_s;
  if (config.match_direction) {
    options.trip_directions = index.directions;
  }
  options.service_days = index.service_days;
  auto const candidates = find_candidates(run, index.trips, tz, options);

  std::vector<std::pair<ResolvedTrip, double>> scored;
  scored.reserve(candidates.size());
  for (auto const& c : candidates) {
    scored.emplace_back(c, score_candidate(run, *c.trip));
  }

  RunEstimate out;
  out.candidates = filter_candidates(std::move(scored), config.margin_m);
  for (auto const& m : out.candidates) {
    auto const trip_idx =
        static_cast<std::size_t>(m.trip.trip - index.trips.data());
    auto est = interpolate_arrivals(run, m, index.parent,
                                    index.stop_parent_seqs[trip_idx],
                                    config.at_stop_m);
    out.estimates.insert(out.estimates.end(),
                         std::make_move_iterator(est.begin()),
                         std::make_move_iterator(est.end()));
  }
  return out;
}

} // namespace transit
