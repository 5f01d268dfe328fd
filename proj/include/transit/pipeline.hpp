#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "transit/config.hpp"
#include "transit/ingest.hpp"
#include "transit/metrics.hpp"
#include "transit/preprocess.hpp"
#include "transit/store.hpp"

namespace transit {

/// Inclusive range of partition dates; open ends match everything.
struct DateRange {
  std::optional<ServiceDate> first;
  std::optional<ServiceDate> last;

  bool contains(ServiceDate d) const {
    return (!first || d >= *first) && (!last || d <= *last);
  }

  /// "A..B", "A.." , "..B" or a single date.
  static DateRange parse(std::string_view text);
  std::string to_string() const;
};

struct GpsIngestSummary {
  std::size_t data_rows{};
  std::size_t accepted{};
  std::vector<Rejection> rejections;
  std::size_t partitions{};
  TimeFormat time_format = TimeFormat::epoch_seconds;
};

/// Parses a GPS feed and merges it into the store's date/route partitions.
GpsIngestSummary ingest_gps_file(Store const& store,
                                 std::filesystem::path const& input,
                                 Config const& config);

/// Validates a schedule and writes its canonical form into the store.
Schedule ingest_schedule_file(Store const& store,
                              std::filesystem::path const& input);

struct PipelineOptions {
  DateRange range;
  std::optional<std::string> route;
  unsigned workers = 0;  // 0 picks the hardware concurrency
};

struct StageCounts {
  std::size_t computed{};
  std::size_t reused{};
  std::size_t skipped{};
  std::size_t failed{};
};

struct PipelineReport {
  StageCounts preprocess;
  StageCounts estimate;
  bool analytics_computed{};
  bool analytics_reused{};
  PreprocessStats stats;  // partitions preprocessed in this call
  std::size_t runs_matched{};
  std::size_t runs_unmatched{};
  std::size_t estimates{};
  std::size_t interpolated{};
  std::size_t cells{};
  std::vector<std::string> routes_without_schedule;
  std::vector<std::string> failures;

  nlohmann::ordered_json to_json() const;
};

PipelineReport run_preprocess(Store const& store, Config const& config,
                              PipelineOptions const& options = {});
PipelineReport run_estimate(Store const& store, Config const& config,
                            PipelineOptions const& options = {});
PipelineReport run_analyze(Store const& store, Config const& config,
                           PipelineOptions const& options = {});

/// preprocess, estimate and analyze; stages whose inputs and config hashes
/// match the manifest are reused.
PipelineReport run_pipeline(Store const& store, Config const& config,
                            PipelineOptions const& options = {});

/// Slots of one route over the given partitions: observed slots from
/// estimates plus missed slots of trips with no estimate on a day where the
/// service runs and the route/direction had at least one run.
std::vector<Slot> collect_route_slots(Store const& store, Config const& config,
                                      Schedule const& schedule,
                                      std::string const& route,
                                      std::vector<Partition> const& partitions,
                                      nlohmann::json const& manifest);

} // namespace transit
