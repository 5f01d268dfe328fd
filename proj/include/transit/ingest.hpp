#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "transit/core.hpp"

namespace transit {

struct Identifier {
  std::string bus_id;
  std::string run_id;

  friend auto operator<=>(Identifier const&, Identifier const&) = default;
};

struct GpsRecord {
  std::string route;
  std::string bus_id;
  std::string run_id;
  EpochSeconds time{};
  GeoPoint pos;

  Identifier identifier() const { return {bus_id, run_id}; }

  friend bool operator==(GpsRecord const&, GpsRecord const&) = default;
};

struct Stop {
  std::string stop_id;
  std::string name;
  GeoPoint pos;
};

struct StopTime {
  std::string route;
  std::string trip;
  int seq{};
  std::string stop;
  ServiceTime arrival;
  GeoPoint pos;
  std::string name;
};

/// Days-of-week a service id operates on. Recognized ids: "ALL", "DAILY",
/// "WEEKDAY", "SATURDAY", "SUNDAY", "WEEKEND" (case-insensitive, matched as
/// substrings, e.g. "DEC17-Weekday-01"), or a 7-character 0/1 mask starting
/// on Monday. Anything else runs every day.
class ServiceDays {
public:
  static ServiceDays parse(std::string_view service_id);
  static ServiceDays all() { return ServiceDays{0x7f}; }

  bool runs_on(ServiceDate d) const;
  bool runs_on_weekday(int iso_weekday) const {
    return (mask_ >> (iso_weekday - 1)) & 1U;
  }
  std::uint8_t mask() const { return mask_; }

  /// "Daily", "Weekday", "Saturday", "Sunday", "Weekend" or "Mon,Wed,...".
  std::string describe() const;

private:
  explicit ServiceDays(std::uint8_t mask) : mask_{mask} {}
  std::uint8_t mask_;
};

struct ScheduledTrip {
  std::string trip;
  std::string route;
  std::string service = "ALL";
  std::vector<StopTime> stop_times;

  ServiceDays service_days() const { return ServiceDays::parse(service); }
  ServiceTime first_time() const { return stop_times.front().arrival; }
  ServiceTime last_time() const { return stop_times.back().arrival; }
};

struct Schedule {
  // Trips of each route, sorted by trip id; stop_times sorted by seq.
  std::map<std::string, std::vector<ScheduledTrip>> routes;
  std::map<std::string, Stop> stops;

  std::vector<ScheduledTrip> const* trips_for(std::string const& route) const;
  std::size_t trip_count() const;
  std::size_t stop_route_pairs() const;
};

struct Rejection {
  std::size_t line{};
  std::string reason;
};

enum class TimeFormat { epoch_seconds, local_datetime };

struct GpsIngestReport {
  std::size_t data_rows{};
  std::vector<Rejection> rejections;
  TimeFormat time_format = TimeFormat::epoch_seconds;
};

struct GpsIngestResult {
  std::vector<GpsRecord> records;
  GpsIngestReport report;
};

inline constexpr char const* kGpsHeader = "route_id,bus_id,run_id,time,lat,lon";
inline constexpr char const* kScheduleHeader =
    "route_id,trip_id,stop_sequence,stop_name,arrival_time,lat,lon,service_id,"
    "stop_id";

/// Parses a GPS CSV feed. Malformed rows are collected in the report with
/// their line numbers; throws format_error when the header lacks a column or
/// when more than max_reject_fraction of data rows are rejected.
GpsIngestResult ingest_gps(std::istream& in, TimeContext const& tz,
                           double max_reject_fraction = 0.10);

/// Parses the flattened schedule CSV. Rows may arrive in any order. A
/// missing service_id column defaults to "ALL"; a missing stop_id column
/// uses stop_name as the stop identifier.
Schedule ingest_schedule(std::istream& in);

/// Canonical schedule CSV (kScheduleHeader), sorted by (route, trip, seq).
void write_schedule_csv(std::ostream& out, Schedule const& schedule);

/// Canonical GPS CSV rows (kGpsHeader) with epoch-second times.
void append_gps_row(std::string& out, GpsRecord const& r);

} // namespace transit
