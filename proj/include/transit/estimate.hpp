#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transit/config.hpp"
#include "transit/core.hpp"
#include "transit/ingest.hpp"
#include "transit/preprocess.hpp"

namespace transit {

/// A scheduled trip pinned to one service date.
struct ResolvedTrip {
  ScheduledTrip const* trip{};
  ServiceDate service_date;
  EpochSeconds start{};
  EpochSeconds end{};
};

struct CandidateOptions {
  // The trip span is widened by these amounts before the containment test.
  std::int64_t early_slack_s = 0;
  std::int64_t late_slack_s = 0;
  // Parallel to the trips span; a trip with a known direction different from
  // the run's is skipped. Empty disables the check.
  std::span<std::optional<Direction> const> trip_directions;
  // Parallel to the trips span; parsed from each trip's service id when empty.
  std::span<ServiceDays const> service_days;
};

/// Trips whose span (first to last scheduled stop) covers the run's span and
/// whose service runs on the resolved date. Both the run's service date and
/// the previous one are tried so post-midnight trips are found.
std::vector<ResolvedTrip> find_candidates(GpsRun const& run,
                                          std::span<ScheduledTrip const> trips,
                                          TimeContext const& tz,
                                          CandidateOptions const& options = {});

/// Mean over run records of the distance to the closest stop of the trip.
double score_candidate(GpsRun const& run, ScheduledTrip const& trip);

struct CandidateMatch {
  ResolvedTrip trip;
  double distance_score_m{};
  bool is_primary{};
};

/// Keeps candidates within margin_m of the best score. The best one is
/// primary; ties go to the earliest first stop, then the smallest trip id.
/// Output is ordered primary first, then by score.
std::vector<CandidateMatch> filter_candidates(
    std::vector<std::pair<ResolvedTrip, double>> scored, double margin_m = 150.0);

enum class EstimateMethod { interpolated, unestimated };

char const* to_string(EstimateMethod m);

struct RunKey {
  std::string bus_id;
  std::string run_id;
  EpochSeconds start{};

  friend auto operator<=>(RunKey const&, RunKey const&) = default;
};

struct ArrivalEstimate {
  std::string route;
  RunKey run;
  Direction direction = Direction::forward;
  std::string trip;
  ServiceDate service_date;
  bool is_primary{};
  double score_m{};
  int seq{};
  std::string stop_id;
  ServiceTime scheduled_time;
  EpochSeconds scheduled{};
  std::optional<EpochSeconds> estimated;
  std::optional<std::int64_t> delay_s;
  EstimateMethod method = EstimateMethod::unestimated;
};

/// Parent seq of every stop of the trip, in stop order.
std::vector<int> parent_seqs(ScheduledTrip const& trip, ParentTrip const& parent);

/// Direction implied by the parent seqs of a trip's first and last stop.
std::optional<Direction> trip_direction(std::span<int const> seqs);

/// Constant-speed arrival estimate for every stop of the matched trip.
/// The bracket is the first record at or past the stop in travel order and
/// the record preceding it; a record within at_stop_m of the stop gives its
/// own time. Stops outside the observed span are unestimated.
std::vector<ArrivalEstimate> interpolate_arrivals(
    GpsRun const& run, CandidateMatch const& match, ParentTrip const& parent,
    std::span<int const> stop_parent_seqs, double at_stop_m = 1.0);

std::vector<ArrivalEstimate> interpolate_arrivals(GpsRun const& run,
                                                  CandidateMatch const& match,
                                                  ParentTrip const& parent,
                                                  double at_stop_m = 1.0);

/// Precomputed per-route lookups shared by every run of the route.
struct RouteIndex {
  ParentTrip parent;
  std::span<ScheduledTrip const> trips;
  std::vector<std::vector<int>> stop_parent_seqs;  // per trip
  std::vector<std::optional<Direction>> directions;  // per trip
  std::vector<ServiceDays> service_days;  // per trip

  RouteIndex(std::span<ScheduledTrip const> route_trips);
};

struct RunEstimate {
  std::vector<CandidateMatch> candidates;
  std::vector<ArrivalEstimate> estimates;

  bool matched() const { return !candidates.empty(); }
};

/// Candidate search, scoring, filtering and interpolation for one run.
RunEstimate estimate_run(GpsRun const& run, RouteIndex const& index,
                         EstimateConfig const& config, TimeContext const& tz);

} // namespace transit
