#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "transit/config.hpp"
#include "transit/core.hpp"
#include "transit/estimate.hpp"
#include "transit/ingest.hpp"
#include "transit/preprocess.hpp"

namespace transit {

inline constexpr int kStoreVersion = 1;

std::string read_file(std::filesystem::path const& path);

/// Writes through a temporary sibling and renames it into place.
void write_file(std::filesystem::path const& path, std::string_view body);

/// Advisory flock on <root>/.lock, held for the object's lifetime.
class StoreLock {
public:
  StoreLock(std::filesystem::path const& root, bool exclusive);
  ~StoreLock();
  StoreLock(StoreLock const&) = delete;
  StoreLock& operator=(StoreLock const&) = delete;

private:
  int fd_ = -1;
};

struct Partition {
  ServiceDate date;
  std::string route;

  std::string key() const;  // "YYYY-MM-DD/route"
  friend bool operator==(Partition const&, Partition const&) = default;
  friend bool operator<(Partition const& a, Partition const& b) {
    return std::tie(a.date, a.route) < std::tie(b.date, b.route);
  }
};

class Store {
public:
  explicit Store(std::filesystem::path root);

  std::filesystem::path const& root() const { return root_; }

  std::filesystem::path gps_path(Partition const& p) const;
  std::filesystem::path runs_path(Partition const& p) const;
  std::filesystem::path estimates_path(Partition const& p) const;
  std::filesystem::path schedule_path() const;
  std::filesystem::path analytics_dir() const;
  std::filesystem::path cells_path() const;
  std::filesystem::path summary_path() const;
  std::filesystem::path manifest_path() const;

  /// GPS partitions on disk, sorted by (date, route).
  std::vector<Partition> gps_partitions() const;

  bool has_schedule() const;
  Schedule load_schedule() const;

  /// The manifest, or a fresh skeleton when none exists yet.
  nlohmann::json load_manifest() const;
  void save_manifest(nlohmann::json const& manifest) const;

private:
  std::filesystem::path root_;
};

/// GPS records of one partition file.
std::vector<GpsRecord> load_gps_partition(std::filesystem::path const& path,
                                          TimeContext const& tz);

/// Canonical partition body: header plus rows sorted by (bus, run, time, lat,
/// lon), exact duplicates removed.
std::string gps_partition_body(std::vector<GpsRecord>& records);

int direction_id(Direction d, PreprocessConfig const& config);

void append_run_json(std::string& out, GpsRun const& run, TimeContext const& tz,
                     PreprocessConfig const& config);
std::vector<GpsRun> parse_runs_jsonl(std::string_view body);

void append_estimate_json(std::string& out, ArrivalEstimate const& e,
                          TimeContext const& tz, PreprocessConfig const& config);
std::vector<ArrivalEstimate> parse_estimates_jsonl(std::string_view body);

} // namespace transit
