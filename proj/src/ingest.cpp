#include "transit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "transit/text.hpp"

namespace transit {

namespace {

std::string lower(std::string_view s) {
  std::string out{s};
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

struct Header {
  std::unordered_map<std::string, std::size_t> index;

  std::optional<std::size_t> find(std::string const& name) const {
    auto const it = index.find(name);
    return it == index.end() ? std::nullopt : std::optional{it->second};
  }

  std::size_t require(std::string const& name, char const* what) const {
    auto const col = find(name);
    if (!col) {
      throw format_error(std::string{what} + ": header is missing column '" +
                         name + "'");
    }
    return *col;
  }
};

Header read_header(std::istream& in, char const* what) {
  std::string line;
  if (!std::getline(in, line)) {
    if (in.bad()) {
      throw io_error(std::string{what} + ": read failure");
    }
    throw format_error(std::string{what} + ": missing header row");
  }
  auto view = text::trim_cr(line);
  if (view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") {
    view.remove_prefix(3);
  }
  std::vector<std::string_view> fields;
  text::split_fields(view, fields);
  Header h;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    h.index.emplace(std::string{fields[i]}, i);
  }
  return h;
}

bool is_epoch(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
}

std::optional<EpochSeconds> parse_local_datetime(std::string_view s,
                                                 TimeContext const& tz) {
  // YYYY-MM-DD HH:MM:SS or YYYY-MM-DDTHH:MM:SS
  if (s.size() != 19 || (s[10] != ' ' && s[10] != 'T')) {
    return std::nullopt;
  }
  auto const y = text::parse_int<int>(s.substr(0, 4));
  auto const mo = text::parse_int<int>(s.substr(5, 2));
  auto const d = text::parse_int<int>(s.substr(8, 2));
  auto const h = text::parse_int<int>(s.substr(11, 2));
  auto const mi = text::parse_int<int>(s.substr(14, 2));
  auto const se = text::parse_int<int>(s.substr(17, 2));
  if (!y || !mo || !d || !h || !mi || !se || s[4] != '-' || s[7] != '-' ||
      s[13] != ':' || s[16] != ':' || *mo < 1 || *mo > 12 || *d < 1 ||
      *d > 31 || *h > 23 || *mi > 59 || *se > 59) {
    return std::nullopt;
  }
  auto const cs = absl::CivilSecond{*y, *mo, *d, *h, *mi, *se};
  if (cs.day() != *d) {
    return std::nullopt;
  }
  return tz.from_local(cs);
}

} // namespace

ServiceDays ServiceDays::parse(std::string_view const service_id) {
  if (service_id.size() == 7 &&
      std::all_of(service_id.begin(), service_id.end(),
                  [](char c) { return c == '0' || c == '1'; })) {
    std::uint8_t mask = 0;
    for (std::size_t i = 0; i < 7; ++i) {
      if (service_id[i] == '1') {
        mask |= static_cast<std::uint8_t>(1U << i);
      }
    }
    return ServiceDays{mask};
  }
  auto const id = lower(service_id);
  auto const has = [&](char const* s) {
    return id.find(s) != std::string::npos;
  };
  if (has("weekday")) {
    return ServiceDays{0x1f};
  }
  if (has("weekend")) {
    return ServiceDays{0x60};
  }
  if (has("saturday")) {
    return ServiceDays{0x20};
  }
  if (has("sunday")) {
    return ServiceDays{0x40};
  }
  return all();
}

bool ServiceDays::runs_on(ServiceDate const d) const {
  return runs_on_weekday(iso_weekday(d));
}

std::string ServiceDays::describe() const {
  switch (mask_) {
    case 0x7f: return "Daily";
    case 0x1f: return "Weekday";
    case 0x20: return "Saturday";
    case 0x40: return "Sunday";
    case 0x60: return "Weekend";
    default: break;
  }
  static constexpr char const* kNames[] = {"Mon", "Tue", "Wed", "Thu",
                                           "Fri", "Sat", "Sun"};
  std::string out;
  for (int i = 0; i < 7; ++i) {
    if ((mask_ >> i) & 1U) {
      if (!out.empty()) {
        out += ',';
      }
      out += kNames[i];
    }
  }
  return out.empty() ? "None" : out;
}

std::vector<ScheduledTrip> const* Schedule::trips_for(
    std::string const& route) const {
  auto const it = routes.find(route);
  return it == routes.end() ? nullptr : &it->second;
}

std::size_t Schedule::trip_count() const {
  std::size_t n = 0;
  for (auto const& [route, trips] : routes) {
    n += trips.size();
  }
  return n;
}

std::size_t Schedule::stop_route_pairs() const {
  std::set<std::pair<std::string, std::string>> pairs;
  for (auto const& [route, trips] : routes) {
    for (auto const& t : trips) {
      for (auto const& st : t.stop_times) {
        pairs.emplace(route, st.stop);
      }
    }
  }
  return pairs.size();
}

GpsIngestResult ingest_gps(std::istream& in, TimeContext const& tz,
                           double const max_reject_fraction) {
  auto const header = read_header(in, "gps csv");
  auto const c_route = header.require("route_id", "gps csv");
  auto const c_bus = header.require("bus_id", "gps csv");
  auto const c_run = header.require("run_id", "gps csv");
  auto const c_time = header.require("time", "gps csv");
  auto const c_lat = header.require("lat", "gps csv");
  auto const c_lon = header.require("lon", "gps csv");
  auto const n_cols = header.index.size();

  GpsIngestResult result;
  auto& report = result.report;
  std::optional<TimeFormat> format;

  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 1;
  auto const reject = [&](std::string reason) {
    report.rejections.push_back({line_no, std::move(reason)});
  };

  while (std::getline(in, line)) {
    ++line_no;
    auto const view = text::trim_cr(line);
    if (text::trim(view).empty()) {
      continue;
    }
    ++report.data_rows;
    text::split_fields(view, f);
    if (f.size() != n_cols) {
      reject("expected " + std::to_string(n_cols) + " fields, got " +
             std::to_string(f.size()));
      continue;
    }
    if (f[c_route].empty()) {
      reject("empty route_id");
      continue;
    }
    if (f[c_bus].empty()) {
      reject("empty bus_id");
      continue;
    }
    if (f[c_run].empty()) {
      reject("empty run_id");
      continue;
    }
    if (!format) {
      if (is_epoch(f[c_time])) {
        format = TimeFormat::epoch_seconds;
      } else if (parse_local_datetime(f[c_time], tz)) {
        format = TimeFormat::local_datetime;
      } else {
        reject("bad time '" + std::string{f[c_time]} + "'");
        continue;
      }
      report.time_format = *format;
    }
    std::optional<EpochSeconds> t;
    if (*format == TimeFormat::epoch_seconds) {
      if (is_epoch(f[c_time])) {
        t = text::parse_int<EpochSeconds>(f[c_time]);
      }
    } else {
      t = parse_local_datetime(f[c_time], tz);
    }
    if (!t) {
      reject("bad time '" + std::string{f[c_time]} + "'");
      continue;
    }
    auto const lat = text::parse_double(f[c_lat]);
    if (!lat) {
      reject("bad lat '" + std::string{f[c_lat]} + "'");
      continue;
    }
    auto const lon = text::parse_double(f[c_lon]);
    if (!lon) {
      reject("bad lon '" + std::string{f[c_lon]} + "'");
      continue;
    }
    GeoPoint pos;
    try {
      pos = make_geo_point(*lat, *lon);
    } catch (invalid_input_error const& e) {
      reject(e.what());
      continue;
    }
    result.records.push_back(GpsRecord{std::string{f[c_route]},
                                       std::string{f[c_bus]},
                                       std::string{f[c_run]}, *t, pos});
  }
  if (in.bad()) {
    throw io_error("gps csv: read failure at line " + std::to_string(line_no));
  }

  auto const rejected = report.rejections.size();
  if (report.data_rows > 0 &&
      static_cast<double>(rejected) >
          max_reject_fraction * static_cast<double>(report.data_rows)) {
    auto msg = "gps csv: " + std::to_string(rejected) + " of " +
               std::to_string(report.data_rows) +
               " rows rejected, above threshold";
    if (!report.rejections.empty()) {
      msg += " (first: line " + std::to_string(report.rejections[0].line) +
             ": " + report.rejections[0].reason + ")";
    }
    throw format_error(msg);
  }
  return result;
}

Schedule ingest_schedule(std::istream& in) {
  auto const header = read_header(in, "schedule csv");
  auto const c_route = header.require("route_id", "schedule csv");
  auto const c_trip = header.require("trip_id", "schedule csv");
  auto const c_seq = header.require("stop_sequence", "schedule csv");
  auto const c_name = header.require("stop_name", "schedule csv");
  auto const c_arrival = header.require("arrival_time", "schedule csv");
  auto const c_lat = header.require("lat", "schedule csv");
  auto const c_lon = header.require("lon", "schedule csv");
  auto const c_service = header.find("service_id");
  auto const c_stop = header.find("stop_id");
  auto const n_cols = header.index.size();

  std::map<std::string, ScheduledTrip> trips;
  Schedule schedule;

  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 1;
  auto const fail = [&](std::string const& why) {
    throw parse_error("schedule csv line " + std::to_string(line_no) + ": " +
                      why);
  };

  while (std::getline(in, line)) {
    ++line_no;
    auto const view = text::trim_cr(line);
    if (text::trim(view).empty()) {
      continue;
    }
    text::split_fields(view, f);
    if (f.size() != n_cols) {
      fail("expected " + std::to_string(n_cols) + " fields, got " +
           std::to_string(f.size()));
    }
    StopTime st;
    st.route = std::string{f[c_route]};
    st.trip = std::string{f[c_trip]};
    if (st.route.empty() || st.trip.empty()) {
      fail("empty route_id or trip_id");
    }
    auto const seq = text::parse_int<int>(f[c_seq]);
    if (!seq || *seq < 0) {
      fail("bad stop_sequence '" + std::string{f[c_seq]} + "'");
    }
    st.seq = *seq;
    st.name = std::string{f[c_name]};
    st.stop = c_stop ? std::string{f[*c_stop]} : st.name;
    if (st.stop.empty()) {
      fail("empty stop identifier");
    }
    try {
      st.arrival = parse_service_time(f[c_arrival]);
    } catch (parse_error const& e) {
      fail(e.what());
    }
    auto const lat = text::parse_double(f[c_lat]);
    auto const lon = text::parse_double(f[c_lon]);
    if (!lat || !lon) {
      fail("bad coordinate");
    }
    try {
      st.pos = make_geo_point(*lat, *lon);
    } catch (invalid_input_error const& e) {
      fail(e.what());
    }
    auto const service =
        c_service && !f[*c_service].empty() ? std::string{f[*c_service]}
                                            : std::string{"ALL"};

    auto [it, inserted] = trips.try_emplace(st.trip);
    auto& trip = it->second;
    if (inserted) {
      trip.trip = st.trip;
      trip.route = st.route;
      trip.service = service;
    } else if (trip.route != st.route) {
      throw validation_error("trip " + st.trip + " appears on routes " +
                             trip.route + " and " + st.route);
    } else if (trip.service != service) {
      throw validation_error("trip " + st.trip + " has conflicting service ids");
    }
    trip.stop_times.push_back(std::move(st));
  }
  if (in.bad()) {
    throw io_error("schedule csv: read failure");
  }

  for (auto& [id, trip] : trips) {
    auto& sts = trip.stop_times;
    std::sort(sts.begin(), sts.end(),
              [](StopTime const& a, StopTime const& b) { return a.seq < b.seq; });
    for (std::size_t i = 1; i < sts.size(); ++i) {
      if (sts[i].seq == sts[i - 1].seq) {
        throw validation_error("trip " + id + ": duplicate stop_sequence " +
                               std::to_string(sts[i].seq));
      }
      if (sts[i].arrival < sts[i - 1].arrival) {
        throw validation_error("trip " + id +
                               ": arrival times decrease at stop_sequence " +
                               std::to_string(sts[i].seq));
      }
    }
    // Canonical order, so the first definition of a stop does not depend on
    // row order.
    for (auto const& st : sts) {
      schedule.stops.try_emplace(st.stop, Stop{st.stop, st.name, st.pos});
    }
    schedule.routes[trip.route].push_back(std::move(trip));
  }
  return schedule;
}

void write_schedule_csv(std::ostream& out, Schedule const& schedule) {
  std::string buf;
  buf += kScheduleHeader;
  buf += '\n';
  for (auto const& [route, trips] : schedule.routes) {
    for (auto const& t : trips) {
      for (auto const& st : t.stop_times) {
        buf += route;
        buf += ',';
        buf += t.trip;
        buf += ',';
        text::append_int(buf, st.seq);
        buf += ',';
        buf += st.name;
        buf += ',';
        buf += format_service_time(st.arrival);
        buf += ',';
        text::append_double(buf, st.pos.lat);
        buf += ',';
        text::append_double(buf, st.pos.lon);
        buf += ',';
        buf += t.service;
        buf += ',';
        buf += st.stop;
        buf += '\n';
      }
    }
  }
  out << buf;
}

void append_gps_row(std::string& out, GpsRecord const& r) {
  out += r.route;
  out += ',';
  out += r.bus_id;
  out += ',';
  out += r.run_id;
  out += ',';
  text::append_int(out, r.time);
  out += ',';
  text::append_double(out, r.pos.lat);
  out += ',';
  text::append_double(out, r.pos.lon);
  out += '\n';
}

} // namespace transit
