#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "transit/pipeline.hpp"
#include "transit/store.hpp"
#include "transit/synth.hpp"

namespace transit::testing {

/// Generates a scenario into <dir>/input and ingests it into <dir>/store.
inline synth::Generated ingest_scenario(std::filesystem::path const& dir,
                                        synth::Scenario const& sc,
                                        Config const& config = {}) {
  auto g = synth::generate(sc);
  synth::write_generated(g, sc, dir / "input");
  Store const store{dir / "store"};
  ingest_schedule_file(store, dir / "input" / "schedule.csv");
  ingest_gps_file(store, dir / "input" / "gps.csv", config);
  return g;
}

/// Every regular file under root except the lock, keyed by relative path.
inline std::map<std::string, std::string> snapshot(std::filesystem::path const& root) {
  std::map<std::string, std::string> out;
  for (auto const& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == ".lock") {
      continue;
    }
    out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

} // namespace transit::testing
