#include "transit/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace transit {

bool is_valid(GeoPoint const& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

GeoPoint make_geo_point(double const lat, double const lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw invalid_input_error("non-finite coordinate");
  }
  if (lat < -90.0 || lat > 90.0) {
    throw invalid_input_error("lat out of range");
  }
  if (lon < -180.0 || lon > 180.0) {
    throw invalid_input_error("lon out of range");
  }
  return GeoPoint{lat, lon};
}

double haversine_m(GeoPoint const& a, GeoPoint const& b) {
  if (!std::isfinite(a.lat) || !std::isfinite(a.lon) ||
      !std::isfinite(b.lat) || !std::isfinite(b.lon)) {
    throw invalid_input_error("non-finite coordinate");
  }
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  auto const phi1 = a.lat * kRad;
  auto const phi2 = b.lat * kRad;
  auto const dphi = (b.lat - a.lat) * kRad;
  auto const dlambda = (b.lon - a.lon) * kRad;
  auto const s1 = std::sin(dphi / 2.0);
  auto const s2 = std::sin(dlambda / 2.0);
  auto const h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

namespace {

int parse_two_or_more_digits(std::string_view field, char const* name,
                             std::string_view text) {
  if (field.empty() || field.size() > 3) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': bad " + name);
  }
  int value = 0;
  auto const [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': bad " + name);
  }
  return value;
}

} // namespace

ServiceTime parse_service_time(std::string_view const text) {
  auto const c1 = text.find(':');
  auto const c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
  if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': expected HH:MM:SS");
  }
  auto const hh = parse_two_or_more_digits(text.substr(0, c1), "hours", text);
  auto const mm_field = text.substr(c1 + 1, c2 - c1 - 1);
  auto const ss_field = text.substr(c2 + 1);
  if (mm_field.size() != 2) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': bad minutes");
  }
  if (ss_field.size() != 2) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': bad seconds");
  }
  auto const mm = parse_two_or_more_digits(mm_field, "minutes", text);
  auto const ss = parse_two_or_more_digits(ss_field, "seconds", text);
  if (mm >= 60) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': minutes >= 60");
  }
  if (ss >= 60) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': seconds >= 60");
  }
  auto const total = hh * 3600 + mm * 60 + ss;
  if (total >= 2 * kSecondsPerDay) {
    throw parse_error("malformed service time '" + std::string{text} +
                      "': beyond 48:00:00");
  }
  return ServiceTime{total};
}

std::string format_service_time(ServiceTime const t) {
  char buf[16];
  auto const h = t.seconds / 3600;
  auto const m = (t.seconds / 60) % 60;
  auto const s = t.seconds % 60;
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", h, m, s);
  return buf;
}

std::string format_date(ServiceDate const d) {
  return absl::FormatCivilTime(d);
}

ServiceDate parse_date(std::string_view const text) {
  ServiceDate d;
  if (text.size() != 10 || !absl::ParseCivilTime(absl::string_view(text.data(), text.size()), &d)) {
    throw parse_error("malformed date '" + std::string{text} +
                      "': expected YYYY-MM-DD");
  }
  return d;
}

int iso_weekday(ServiceDate const d) {
  switch (absl::GetWeekday(d)) {
    case absl::Weekday::monday: return 1;
    case absl::Weekday::tuesday: return 2;
    case absl::Weekday::wednesday: return 3;
    case absl::Weekday::thursday: return 4;
    case absl::Weekday::friday: return 5;
    case absl::Weekday::saturday: return 6;
    case absl::Weekday::sunday: return 7;
  }
  return 0;
}

TimeContext::TimeContext(std::string const& zone_name) : name_{zone_name} {
  if (!absl::LoadTimeZone(zone_name, &zone_)) {
    throw invalid_input_error("unknown timezone '" + zone_name + "'");
  }
}

ServiceDate TimeContext::local_date(EpochSeconds const t) const {
  return ServiceDate{local_time(t)};
}

absl::CivilSecond TimeContext::local_time(EpochSeconds const t) const {
  return absl::ToCivilSecond(absl::FromUnixSeconds(t), zone_);
}

EpochSeconds TimeContext::from_local(absl::CivilSecond const cs) const {
  return absl::ToUnixSeconds(absl::FromCivil(cs, zone_));
}

EpochSeconds TimeContext::resolve(ServiceDate const service_date,
                                  ServiceTime const t) const {
  auto const noon = absl::CivilSecond{service_date.year(), service_date.month(),
                                      service_date.day(), 12, 0, 0};
  return from_local(noon) - 12 * 3600 + t.seconds;
}

std::string TimeContext::format_iso(EpochSeconds const t) const {
  std::string out;
  append_iso(out, t);
  return out;
}

namespace {

void append_digits(std::string& out, int v, int width) {
  char buf[8];
  for (int i = width - 1; i >= 0; --i) {
    buf[i] = static_cast<char>('0' + v % 10);
    v /= 10;
  }
  out.append(buf, static_cast<std::size_t>(width));
}

} // namespace

void TimeContext::append_iso(std::string& out, EpochSeconds const t) const {
  auto const cs = local_time(t);
  auto const as_utc = (cs - absl::CivilSecond{1970, 1, 1, 0, 0, 0});
  auto const offset = static_cast<std::int64_t>(as_utc) - t;
  append_digits(out, static_cast<int>(cs.year()), 4);
  out.push_back('-');
  append_digits(out, cs.month(), 2);
  out.push_back('-');
  append_digits(out, cs.day(), 2);
  out.push_back('T');
  append_digits(out, cs.hour(), 2);
  out.push_back(':');
  append_digits(out, cs.minute(), 2);
  out.push_back(':');
  append_digits(out, cs.second(), 2);
  auto const abs_off = offset < 0 ? -offset : offset;
  out.push_back(offset < 0 ? '-' : '+');
  append_digits(out, static_cast<int>(abs_off / 3600), 2);
  out.push_back(':');
  append_digits(out, static_cast<int>((abs_off / 60) % 60), 2);
}

EpochSeconds parse_iso(std::string_view const text) {
  auto const bad = [&]() {
    return parse_error("malformed timestamp '" + std::string{text} + "'");
  };
  if (text.size() < 20 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
      text[16] != ':') {
    throw bad();
  }
  auto const num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    auto const [ptr, ec] =
        std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc{} || ptr != text.data() + pos + len) {
      throw bad();
    }
    return v;
  };
  absl::CivilSecond const cs{num(0, 4), num(5, 2), num(8, 2),
                             num(11, 2), num(14, 2), num(17, 2)};
  std::int64_t offset = 0;
  auto const tail = text.substr(19);
  if (tail == "Z") {
    offset = 0;
  } else if (tail.size() == 6 && (tail[0] == '+' || tail[0] == '-') &&
             tail[3] == ':') {
    offset = num(20, 2) * 3600 + num(23, 2) * 60;
    if (tail[0] == '-') {
      offset = -offset;
    }
  } else {
    throw bad();
  }
  auto const as_utc = cs - absl::CivilSecond{1970, 1, 1, 0, 0, 0};
  return static_cast<EpochSeconds>(as_utc) - offset;
}

} // namespace transit
