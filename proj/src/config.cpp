#include "transit/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "transit/core.hpp"

namespace transit {

using json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view const bytes, std::uint64_t hash) {
  for (auto const c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string fnv1a_hex(std::string_view const bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

namespace {

void check_keys(json const& section, std::string const& name,
                std::set<std::string> const& allowed) {
  if (!section.is_object()) {
    throw validation_error("config section '" + name + "' must be an object");
  }
  for (auto const& [key, value] : section.items()) {
    if (!allowed.contains(key)) {
      throw validation_error("unknown config key '" + name + "." + key + "'");
    }
  }
}

template <typename T>
void read(json const& section, char const* key, T& out) {
  if (auto const it = section.find(key); it != section.end()) {
    out = it->get<T>();
  }
}

} // namespace

Config Config::from_json(json const& j) {
  Config c;
  check_keys(j, "<root>", {"core", "preprocess", "estimate", "metrics"});
  if (auto const it = j.find("core"); it != j.end()) {
    check_keys(*it, "core", {"timezone", "max_reject_fraction"});
    read(*it, "timezone", c.core.timezone);
    read(*it, "max_reject_fraction", c.core.max_reject_fraction);
  }
  if (auto const it = j.find("preprocess"); it != j.end()) {
    check_keys(*it, "preprocess",
               {"outlier_m", "min_run_records", "forward_direction_id",
                "reverse_direction_id", "boundary_window_s"});
    read(*it, "outlier_m", c.preprocess.outlier_m);
    read(*it, "min_run_records", c.preprocess.min_run_records);
    read(*it, "forward_direction_id", c.preprocess.forward_direction_id);
    read(*it, "reverse_direction_id", c.preprocess.reverse_direction_id);
    read(*it, "boundary_window_s", c.preprocess.boundary_window_s);
  }
  if (auto const it = j.find("estimate"); it != j.end()) {
    check_keys(*it, "estimate",
               {"margin_m", "candidate_early_slack_s", "candidate_late_slack_s",
                "match_direction", "at_stop_m"});
    read(*it, "margin_m", c.estimate.margin_m);
    read(*it, "candidate_early_slack_s", c.estimate.candidate_early_slack_s);
    read(*it, "candidate_late_slack_s", c.estimate.candidate_late_slack_s);
    read(*it, "match_direction", c.estimate.match_direction);
    read(*it, "at_stop_m", c.estimate.at_stop_m);
  }
  if (auto const it = j.find("metrics"); it != j.end()) {
    check_keys(*it, "metrics", {"early_s", "late_s", "include_all_candidates"});
    read(*it, "early_s", c.metrics.early_s);
    read(*it, "late_s", c.metrics.late_s);
    read(*it, "include_all_candidates", c.metrics.include_all_candidates);
  }
  c.validate();
  return c;
}

Config Config::load(std::filesystem::path const& path) {
  std::ifstream in{path};
  if (!in) {
    throw io_error("cannot open config " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (json::exception const& e) {
    throw parse_error("config " + path.string() + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (json::exception const& e) {
    throw validation_error("config " + path.string() + ": " + e.what());
  }
}

json Config::to_json() const {
  json j;
  j["core"] = {{"timezone", core.timezone},
               {"max_reject_fraction", core.max_reject_fraction}};
  j["preprocess"] = {{"outlier_m", preprocess.outlier_m},
                     {"min_run_records", preprocess.min_run_records},
                     {"forward_direction_id", preprocess.forward_direction_id},
                     {"reverse_direction_id", preprocess.reverse_direction_id},
                     {"boundary_window_s", preprocess.boundary_window_s}};
  j["estimate"] = {
      {"margin_m", estimate.margin_m},
      {"candidate_early_slack_s", estimate.candidate_early_slack_s},
      {"candidate_late_slack_s", estimate.candidate_late_slack_s},
      {"match_direction", estimate.match_direction},
      {"at_stop_m", estimate.at_stop_m}};
  j["metrics"] = {{"early_s", metrics.early_s},
                  {"late_s", metrics.late_s},
                  {"include_all_candidates", metrics.include_all_candidates}};
  return j;
}

void Config::validate() const {
  TimeContext{core.timezone};
  if (!(core.max_reject_fraction >= 0.0 && core.max_reject_fraction <= 1.0)) {
    throw validation_error("core.max_reject_fraction must be in [0, 1]");
  }
  if (!(preprocess.outlier_m > 0.0)) {
    throw validation_error("preprocess.outlier_m must be positive");
  }
  if (preprocess.min_run_records < 2) {
    throw validation_error("preprocess.min_run_records must be >= 2");
  }
  if (preprocess.forward_direction_id == preprocess.reverse_direction_id) {
    throw validation_error("direction ids must differ");
  }
  if (!(estimate.margin_m >= 0.0)) {
    throw validation_error("estimate.margin_m must be non-negative");
  }
  if (estimate.candidate_early_slack_s < 0 ||
      estimate.candidate_late_slack_s < 0) {
    throw validation_error("candidate slack must be non-negative");
  }
  if (!(estimate.at_stop_m >= 0.0)) {
    throw validation_error("estimate.at_stop_m must be non-negative");
  }
  if (metrics.early_s < 0 || metrics.late_s < 0) {
    throw validation_error("on-time window bounds must be non-negative");
  }
}

std::string Config::preprocess_hash() const {
  auto const j = to_json();
  return fnv1a_hex(json{{"core", j["core"]}, {"preprocess", j["preprocess"]}}
                       .dump());
}

std::string Config::estimate_hash() const {
  auto const j = to_json();
  return fnv1a_hex(json{{"core", j["core"]},
                        {"preprocess", j["preprocess"]},
                        {"estimate", j["estimate"]}}
                       .dump());
}

std::string Config::metrics_hash() const { return fnv1a_hex(to_json().dump()); }

} // namespace transit
