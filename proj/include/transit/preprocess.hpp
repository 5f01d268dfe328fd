#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transit/config.hpp"
#include "transit/core.hpp"
#include "transit/ingest.hpp"

namespace transit {

enum class Direction { forward, reverse };

char const* to_string(Direction d);
Direction parse_direction(std::string_view s);

struct ParentStop {
  int seq{};
  GeoPoint pos;
};

/// The route's longest scheduled trip; its stop sequence is the progress
/// coordinate every record of the route is mapped onto.
struct ParentTrip {
  std::string route;
  std::string trip;
  std::vector<ParentStop> stops;  // ascending seq
  double cumulative_m{};
};

/// Sum of consecutive stop-to-stop haversine distances.
double cumulative_length_m(ScheduledTrip const& trip);

/// Longest trip by cumulative length; ties go to the smallest trip id.
/// Throws no_schedule_error on an empty list.
ParentTrip select_parent_trip(std::span<ScheduledTrip const> trips);

struct NearestStop {
  std::size_t index{};
  int seq{};
  double dist_m{};
};

/// Nearest parent stop; distances equal within 1e-9 m resolve to the lower
/// seq.
NearestStop nearest_stop(ParentTrip const& parent, GeoPoint const& p);

struct MappedRecord {
  GpsRecord rec;
  int seq{};
  double dist_m{};
  int trend{};
  std::optional<Direction> dir;
};

struct ProgressMapping {
  std::vector<MappedRecord> records;
  std::size_t outliers{};
};

/// Assigns each record the seq of its nearest parent stop. Records farther
/// than outlier_m from every stop are dropped and counted.
ProgressMapping map_progress(std::span<GpsRecord const> records,
                             ParentTrip const& parent,
                             double outlier_m = 400.0);

/// trend_i = sgn(seq_i - seq_{i-1}); the first record gets 0.
void assign_trends(std::span<MappedRecord> mapped);

struct GpsRun {
  std::string route;
  std::string bus_id;
  std::string run_id;
  ServiceDate service_date;
  std::optional<Direction> direction;
  std::vector<MappedRecord> records;

  Identifier identifier() const { return {bus_id, run_id}; }
  EpochSeconds start_time() const { return records.front().rec.time; }
  EpochSeconds end_time() const { return records.back().rec.time; }
};

struct SplitResult {
  std::vector<GpsRun> runs;
  std::size_t idle_dropped{};
  std::size_t short_dropped{};
  std::size_t short_runs{};
};

/// Segments trend-annotated records into runs:
///  1. a zero-trend gap flanked by equal non-zero trends takes that trend;
///  2. remaining zeros (leading, trailing, or between opposing trends) are
///     dropped as idle;
///  3. maximal constant-trend segments become runs;
///  4. runs shorter than min_run_records are dropped.
/// Runs carry route/bus/run ids from their records; service_date and
/// direction are left for the caller.
SplitResult split_runs(std::vector<MappedRecord> mapped,
                       int min_run_records = 5);

/// Sets the run and record directions from the uniform trend. Throws
/// invariant_error on a zero or mixed trend.
GpsRun recover_direction(GpsRun run);

struct PreprocessStats {
  std::size_t records_in{};
  std::size_t duplicates{};
  std::size_t outliers{};
  std::size_t idle_dropped{};
  std::size_t short_dropped{};
  std::size_t short_runs{};
  std::size_t runs_forward{};
  std::size_t runs_reverse{};
  std::size_t boundary_runs{};

  PreprocessStats& operator+=(PreprocessStats const& o);
};

struct GroupResult {
  std::vector<GpsRun> runs;
  PreprocessStats stats;
};

/// Full per-group preprocessing for records of one (route, identifier,
/// service date): time sort, duplicate-timestamp removal, progress mapping,
/// trends, splitting and direction recovery.
GroupResult preprocess_group(std::vector<GpsRecord> records,
                             ParentTrip const& parent,
                             PreprocessConfig const& config,
                             TimeContext const& tz);

} // namespace transit
