#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace transit {

struct CoreConfig {
  std::string timezone = "America/Los_Angeles";
  // Ingest aborts when more than this fraction of rows is rejected.
  double max_reject_fraction = 0.10;
};

struct PreprocessConfig {
  double outlier_m = 400.0;
  int min_run_records = 5;
  int forward_direction_id = 0;
  int reverse_direction_id = 1;
  // Runs ending this close to the next local midnight are reported as
  // boundary runs.
  std::int64_t boundary_window_s = 1800;
};

struct EstimateConfig {
  double margin_m = 150.0;
  std::int64_t candidate_early_slack_s = 300;
  std::int64_t candidate_late_slack_s = 600;
  bool match_direction = true;
  double at_stop_m = 1.0;
};

struct MetricsConfig {
  std::int64_t early_s = 60;
  std::int64_t late_s = 300;
  bool include_all_candidates = false;
};

struct Config {
  CoreConfig core;
  PreprocessConfig preprocess;
  EstimateConfig estimate;
  MetricsConfig metrics;

  /// Reads a JSON document; absent keys keep their defaults, unknown keys
  /// are rejected.
  static Config load(std::filesystem::path const& path);
  static Config from_json(nlohmann::ordered_json const& j);
  nlohmann::ordered_json to_json() const;

  void validate() const;

  // Stable fingerprints of the sections each stage reads.
  std::string preprocess_hash() const;
  std::string estimate_hash() const;
  std::string metrics_hash() const;
};

/// 64-bit FNV-1a rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace transit
