#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "transit/ingest.hpp"

namespace transit::testing {

/// Small seeded generator for property tests.
class Gen {
public:
  explicit Gen(std::uint64_t seed) : engine_{seed} {}

  double real(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }

  GeoPoint point() { return {real(-90.0, 90.0), real(-180.0, 180.0)}; }

private:
  std::mt19937_64 engine_;
};

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
  explicit TempDir(std::string const& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("transit_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(TempDir const&) = delete;
  TempDir& operator=(TempDir const&) = delete;

  std::filesystem::path const& path() const { return path_; }

private:
  std::filesystem::path path_;
};

/// Point d_m meters east of origin along its parallel.
inline GeoPoint east_of(GeoPoint const& origin, double d_m) {
  constexpr double kPi = 3.14159265358979323846;
  auto const lat = origin.lat * kPi / 180.0;
  return {origin.lat, origin.lon + d_m / (kEarthRadiusM * std::cos(lat)) * 180.0 / kPi};
}

/// Point d_m meters north of origin along its meridian; haversine recovers
/// d_m exactly up to rounding.
inline GeoPoint north_of(GeoPoint const& origin, double d_m) {
  constexpr double kPi = 3.14159265358979323846;
  return {origin.lat + d_m / kEarthRadiusM * 180.0 / kPi, origin.lon};
}

inline StopTime stop_time(std::string route, std::string trip, int seq,
                          std::string stop, std::string const& hms, GeoPoint pos) {
  StopTime st;
  st.route = std::move(route);
  st.trip = std::move(trip);
  st.seq = seq;
  st.name = "Stop " + stop;
  st.stop = std::move(stop);
  st.arrival = parse_service_time(hms);
  st.pos = pos;
  return st;
}

inline GpsRecord record(std::string route, std::string bus, std::string run,
                        EpochSeconds t, GeoPoint pos) {
  return {std::move(route), std::move(bus), std::move(run), t, pos};
}

} // namespace transit::testing
