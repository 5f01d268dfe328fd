#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "absl/time/civil_time.h"
#include "absl/time/time.h"

namespace transit {

class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class invalid_input_error : public error {
public:
  using error::error;
};

class parse_error : public error {
public:
  using error::error;
};

class format_error : public error {
public:
  using error::error;
};

class validation_error : public error {
public:
  using error::error;
};

class io_error : public error {
public:
  using error::error;
};

class no_schedule_error : public error {
public:
  using error::error;
};

// Raised when an internal invariant is broken; always a bug.
class invariant_error : public error {
public:
  using error::error;
};

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr std::int32_t kSecondsPerDay = 86'400;

using EpochSeconds = std::int64_t;
using ServiceDate = absl::CivilDay;

struct GeoPoint {
  double lat{};
  double lon{};

  friend bool operator==(GeoPoint const&, GeoPoint const&) = default;
};

bool is_valid(GeoPoint const& p);

/// Builds a point, throwing invalid_input_error when a coordinate is
/// non-finite or out of the WGS84 range.
GeoPoint make_geo_point(double lat, double lon);

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_m(GeoPoint const& a, GeoPoint const& b);

/// Seconds since the service day's reference midnight. Values above 86400
/// belong to post-midnight trips of the previous service day.
struct ServiceTime {
  std::int32_t seconds{};

  friend auto operator<=>(ServiceTime, ServiceTime) = default;
};

/// Parses "HH:MM:SS" (HH may exceed 23).
ServiceTime parse_service_time(std::string_view text);
std::string format_service_time(ServiceTime t);

std::string format_date(ServiceDate d);
ServiceDate parse_date(std::string_view text);

/// ISO weekday, Monday = 1 ... Sunday = 7.
int iso_weekday(ServiceDate d);

/// Reads "YYYY-MM-DDTHH:MM:SS" followed by "Z" or a "+HH:MM" offset.
EpochSeconds parse_iso(std::string_view text);

/// A single configured civil timezone. Conversions are pure and safe to share
/// across threads.
class TimeContext {
public:
  explicit TimeContext(std::string const& zone_name = "America/Los_Angeles");

  std::string const& zone_name() const { return name_; }

  ServiceDate local_date(EpochSeconds t) const;
  absl::CivilSecond local_time(EpochSeconds t) const;
  EpochSeconds from_local(absl::CivilSecond cs) const;

  /// Schedule time on a service date, anchored at noon minus twelve hours.
  EpochSeconds resolve(ServiceDate service_date, ServiceTime t) const;

  /// ISO-8601 with numeric offset, e.g. 2017-12-04T08:00:00-08:00.
  std::string format_iso(EpochSeconds t) const;
  void append_iso(std::string& out, EpochSeconds t) const;

private:
  std::string name_;
  absl::TimeZone zone_;
};

} // namespace transit
