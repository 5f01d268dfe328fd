#include "transit/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <tuple>

#include "transit/ingest.hpp"
#include "transit/text.hpp"

namespace transit::synth {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t const lo, std::int64_t const hi) {
  if (hi < lo) {
    throw invariant_error("uniform_int: empty range");
  }
  auto const span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) {
    return static_cast<std::int64_t>(engine_());
  }
  auto const limit = UINT64_MAX - UINT64_MAX % span;
  for (;;) {
    auto const x = engine_();
    if (x < limit) {
      return lo + static_cast<std::int64_t>(x % span);
    }
  }
}

double Rng::normal() {
  double sum = 0.0;
  for (int i = 0; i < 12; ++i) {
    sum += uniform();
  }
  return sum - 6.0;
}

void Scenario::validate() const {
  auto const fail = [](std::string const& what) {
    throw validation_error("synth scenario: " + what);
  };
  if (n_routes < 1 || n_routes > 90) {
    fail("routes must be in [1, 90]");
  }
  if (stops_per_route < 2 || stops_per_route > 99) {
    fail("stops_per_route must be in [2, 99]");
  }
  if (trips_per_day < 1 || trips_per_day > 400) {
    fail("trips_per_day must be in [1, 400]");
  }
  if (days < 1 || days > 400) {
    fail("days must be in [1, 400]");
  }
  if (gps_interval_s < 1) {
    fail("gps_interval_s must be positive");
  }
  if (!(speed_noise_pct >= 0.0 && speed_noise_pct <= 50.0)) {
    fail("speed_noise_pct must be in [0, 50]");
  }
  if (!(dropout_pct >= 0.0 && dropout_pct < 100.0)) {
    fail("dropout_pct must be in [0, 100)");
  }
  if (!(bunch_pct >= 0.0 && bunch_pct <= 100.0)) {
    fail("bunch_pct must be in [0, 100]");
  }
  if (!std::isfinite(delay_mean_s) || !(delay_sd_s >= 0.0) ||
      !std::isfinite(delay_sd_s)) {
    fail("bad delay model");
  }
  if (min_run_records < 1) {
    fail("min_run_records must be positive");
  }
  // Every ping has to move the bus past at least one stop.
  auto const min_step = kSpeedMps * (1.0 - speed_noise_pct / 100.0) *
                        static_cast<double>(gps_interval_s);
  if (min_step <= 1.1 * kSpeedMps * static_cast<double>(kMaxSegmentS)) {
    fail("gps_interval_s too short for the stop spacing");
  }
  try {
    parse_date(start_date);
    TimeContext{timezone};
  } catch (error const& e) {
    fail(e.what());
  }
}

nlohmann::ordered_json Scenario::to_json() const {
  return {{"seed", seed},
          {"routes", n_routes},
          {"stops_per_route", stops_per_route},
          {"trips_per_day", trips_per_day},
          {"days", days},
          {"gps_interval_s", gps_interval_s},
          {"speed_noise_pct", speed_noise_pct},
          {"delay_mean_s", delay_mean_s},
          {"delay_sd_s", delay_sd_s},
          {"dropout_pct", dropout_pct},
          {"bunch_pct", bunch_pct},
          {"start_date", start_date},
          {"timezone", timezone},
          {"min_run_records", min_run_records}};
}

Scenario Scenario::from_json(nlohmann::ordered_json const& j) {
  Scenario s;
  s.seed = j.value("seed", s.seed);
  s.n_routes = j.value("routes", s.n_routes);
  s.stops_per_route = j.value("stops_per_route", s.stops_per_route);
  s.trips_per_day = j.value("trips_per_day", s.trips_per_day);
  s.days = j.value("days", s.days);
  s.gps_interval_s = j.value("gps_interval_s", s.gps_interval_s);
  s.speed_noise_pct = j.value("speed_noise_pct", s.speed_noise_pct);
  s.delay_mean_s = j.value("delay_mean_s", s.delay_mean_s);
  s.delay_sd_s = j.value("delay_sd_s", s.delay_sd_s);
  s.dropout_pct = j.value("dropout_pct", s.dropout_pct);
  s.bunch_pct = j.value("bunch_pct", s.bunch_pct);
  s.start_date = j.value("start_date", s.start_date);
  s.timezone = j.value("timezone", s.timezone);
  s.min_run_records = j.value("min_run_records", s.min_run_records);
  return s;
}

nlohmann::ordered_json GroundTruth::to_json() const {
  nlohmann::ordered_json j;
  j["timezone"] = timezone;
  auto& trips_j = j["trips"] = nlohmann::ordered_json::array();
  for (auto const& t : trips) {
    nlohmann::ordered_json st = nlohmann::ordered_json::array();
    for (auto const& s : t.stop_times) {
      st.push_back({{"seq", s.seq},
                    {"stop_id", s.stop_id},
                    {"service_s", s.service_s},
                    {"scheduled", s.scheduled}});
    }
    trips_j.push_back({{"route", t.route},
                       {"trip", t.trip},
                       {"service_date", t.service_date},
                       {"direction", t.direction},
                       {"stop_times", std::move(st)}});
  }
  auto& runs_j = j["runs"] = nlohmann::ordered_json::array();
  for (auto const& r : runs) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (auto const& a : r.arrivals) {
      arr.push_back({{"seq", a.seq},
                     {"stop_id", a.stop_id},
                     {"time", a.time},
                     {"observable", a.observable}});
    }
    runs_j.push_back({{"route", r.route},
                      {"bus_id", r.bus_id},
                      {"run_id", r.run_id},
                      {"trip", r.trip},
                      {"service_date", r.service_date},
                      {"direction", r.direction},
                      {"depart", r.depart},
                      {"arrive", r.arrive},
                      {"progress_pings", r.progress_pings},
                      {"run_pings", r.run_pings},
                      {"recovered", r.recovered},
                      {"arrivals", std::move(arr)}});
  }
  return j;
}

GroundTruth GroundTruth::from_json(nlohmann::ordered_json const& j) {
  GroundTruth g;
  g.timezone = j.at("timezone").get<std::string>();
  for (auto const& t : j.at("trips")) {
    TruthTrip trip;
    trip.route = t.at("route").get<std::string>();
    trip.trip = t.at("trip").get<std::string>();
    trip.service_date = t.at("service_date").get<std::string>();
    trip.direction = t.at("direction").get<std::string>();
    for (auto const& s : t.at("stop_times")) {
      trip.stop_times.push_back({s.at("seq").get<int>(),
                                 s.at("stop_id").get<std::string>(),
                                 s.at("service_s").get<std::int32_t>(),
                                 s.at("scheduled").get<EpochSeconds>()});
    }
    g.trips.push_back(std::move(trip));
  }
  for (auto const& r : j.at("runs")) {
    TruthRun run;
    run.route = r.at("route").get<std::string>();
    run.bus_id = r.at("bus_id").get<std::string>();
    run.run_id = r.at("run_id").get<std::string>();
    run.trip = r.at("trip").get<std::string>();
    run.service_date = r.at("service_date").get<std::string>();
    run.direction = r.at("direction").get<std::string>();
    run.depart = r.at("depart").get<EpochSeconds>();
    run.arrive = r.at("arrive").get<EpochSeconds>();
    run.progress_pings = r.at("progress_pings").get<int>();
    run.run_pings = r.at("run_pings").get<int>();
    run.recovered = r.at("recovered").get<bool>();
    for (auto const& a : r.at("arrivals")) {
      run.arrivals.push_back({a.at("seq").get<int>(),
                              a.at("stop_id").get<std::string>(),
                              a.at("time").get<EpochSeconds>(),
                              a.at("observable").get<bool>()});
    }
    g.runs.push_back(std::move(run));
  }
  return g;
}

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

GeoPoint destination(GeoPoint const& from, double bearing_deg, double dist_m) {
  auto const phi1 = deg2rad(from.lat);
  auto const lambda1 = deg2rad(from.lon);
  auto const theta = deg2rad(bearing_deg);
  auto const delta = dist_m / kEarthRadiusM;
  auto const phi2 = std::asin(std::sin(phi1) * std::cos(delta) +
                              std::cos(phi1) * std::sin(delta) * std::cos(theta));
  auto const lambda2 =
      lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                           std::cos(delta) - std::sin(phi1) * std::sin(phi2));
  return {rad2deg(phi2), rad2deg(lambda2)};
}

void append_fixed7(std::string& out, double v) {
  char buf[48];
  auto const [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 7);
  out.append(buf, ptr);
}

// The coordinate as it reads back from the CSV.
GeoPoint quantize(GeoPoint const& p) {
  std::string a;
  std::string b;
  append_fixed7(a, p.lat);
  append_fixed7(b, p.lon);
  return {*text::parse_double(a), *text::parse_double(b)};
}

struct RouteLayout {
  std::string id;
  GeoPoint anchor;
  double bearing{};
  double orient = 1.0;  // sign of arc growth along forward stop order
  std::vector<double> arc;  // forward stop order, arc from anchor
  std::vector<GeoPoint> stops;  // quantized, forward order
  std::vector<std::string> stop_ids;
  std::vector<std::int64_t> seg_s;  // nominal forward segment seconds
  std::int64_t nominal_s{};
  std::int64_t headway_f{};
  std::int64_t headway_r{};
  int n_forward{};
  int n_reverse{};
  int buses_f{};
  int buses_r{};
};

RouteLayout make_layout(Scenario const& sc, int ri, Rng& rng) {
  RouteLayout r;
  r.id = std::to_string(ri + 2);
  r.anchor = {34.05 + (rng.uniform() - 0.5) * 0.2,
              -118.25 + (rng.uniform() - 0.5) * 0.2};
  r.bearing = rng.uniform() * 360.0;
  auto const n = static_cast<std::size_t>(sc.stops_per_route);
  std::vector<std::int64_t> k(n - 1);
  for (auto& v : k) {
    v = Scenario::kMinSegmentS + 2 * rng.uniform_int(0, (Scenario::kMaxSegmentS -
                                                          Scenario::kMinSegmentS) / 2);
  }
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    s[i] = s[i - 1] + Scenario::kSpeedMps * static_cast<double>(k[i - 1]);
  }
  std::vector<GeoPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = quantize(destination(r.anchor, r.bearing, s[i]));
  }
  // Orient the stops so the forward order has the larger summed length,
  // which makes the forward trips the parent.
  double fwd = 0.0;
  double rev = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    fwd += haversine_m(pts[i - 1], pts[i]);
    rev += haversine_m(pts[n - i], pts[n - i - 1]);
  }
  if (rev > fwd) {
    std::reverse(pts.begin(), pts.end());
    std::reverse(s.begin(), s.end());
    std::reverse(k.begin(), k.end());
    r.orient = -1.0;
  }
  r.arc = std::move(s);
  r.stops = std::move(pts);
  r.seg_s = std::move(k);
  for (std::size_t i = 0; i < n; ++i) {
    r.stop_ids.push_back(std::to_string(4756 + ri * 100 + static_cast<int>(i)));
  }
  for (auto const v : r.seg_s) {
    r.nominal_s += v;
  }

  auto const span = Scenario::kServiceEndS - Scenario::kServiceStartS;
  r.n_forward = (sc.trips_per_day + 1) / 2;
  r.n_reverse = sc.trips_per_day / 2;
  r.headway_f = span / r.n_forward;
  r.headway_r = r.n_reverse > 0 ? span / r.n_reverse : span;

  auto const noise = sc.speed_noise_pct / 100.0;
  double t_max = 0.0;
  for (auto const v : r.seg_s) {
    t_max += static_cast<double>(v) / (1.0 - noise) + 2.0;
  }
  auto const need = static_cast<std::int64_t>(std::ceil(t_max)) +
                    Scenario::kMinLayoverS +
                    (Scenario::kDelayMaxS - Scenario::kDelayMinS);
  auto const pool = [&](std::int64_t h) {
    auto const b = static_cast<int>((need + h - 1) / h);
    return std::max(b, 1);
  };
  r.buses_f = pool(r.headway_f);
  r.buses_r = pool(r.headway_r);
  if (r.buses_f > 40 || r.buses_r > 40) {
    throw validation_error("synth scenario: trips_per_day too dense");
  }
  return r;
}

struct VehicleTrip {
  int dir{};  // 0 forward, 1 reverse
  EpochSeconds depart{};
  EpochSeconds arrive{};
  std::vector<std::int64_t> cum_s;    // along-trip, per stop
  std::vector<double> cum_m;          // along-trip, per stop
  std::size_t truth{};
  std::vector<EpochSeconds> progress;  // surviving progress ping times
  std::optional<int> pred_index;       // index of the ping preceding them
  bool seen_progress{};
};

struct Bus {
  std::string bus_id;
  std::string run_id;
  int dir{};
  EpochSeconds appear{};
  std::vector<std::size_t> trips;  // indices into the day's vehicle trips
};

// Along-trip position at time t of a moving trip.
double along_m(VehicleTrip const& v, EpochSeconds t) {
  auto const e = t - v.depart;
  auto const& cs = v.cum_s;
  std::size_t j = 0;
  while (j + 2 < cs.size() && cs[j + 1] <= e) {
    ++j;
  }
  auto const dur = static_cast<double>(cs[j + 1] - cs[j]);
  auto const len = v.cum_m[j + 1] - v.cum_m[j];
  return v.cum_m[j] + len * static_cast<double>(e - cs[j]) / dur;
}

int nearest_index(VehicleTrip const& v, double x) {
  int best = 0;
  auto best_d = std::abs(x - v.cum_m[0]);
  for (std::size_t i = 1; i < v.cum_m.size(); ++i) {
    auto const d = std::abs(x - v.cum_m[i]);
    if (d < best_d) {
      best = static_cast<int>(i);
      best_d = d;
    }
  }
  return best;
}

std::size_t forward_index(RouteLayout const& r, int dir, std::size_t i) {
  return dir == 0 ? i : r.stops.size() - 1 - i;
}

GeoPoint position(RouteLayout const& r, int dir, double along) {
  auto const arc = dir == 0 ? r.arc.front() + r.orient * along
                            : r.arc.back() - r.orient * along;
  return quantize(destination(r.anchor, r.bearing, arc));
}

} // namespace

Generated generate(Scenario const& sc) {
  sc.validate();
  TimeContext const tz{sc.timezone};
  Rng rng{sc.seed};
  Generated out;
  out.truth.timezone = sc.timezone;

  std::vector<RouteLayout> routes;
  for (int ri = 0; ri < sc.n_routes; ++ri) {
    routes.push_back(make_layout(sc, ri, rng));
  }

  auto trip_id = [](RouteLayout const& r, int dir, int k) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", k);
    return r.id + (dir == 0 ? "-F-" : "-R-") + buf;
  };
  auto sched_depart = [](RouteLayout const& r, int dir, int k) {
    return dir == 0 ? Scenario::kServiceStartS + k * r.headway_f
                    : Scenario::kServiceStartS + k * r.headway_r + r.headway_r / 2;
  };

  // Schedule, identical every day.
  out.schedule_csv = std::string{kScheduleHeader} + "\n";
  for (auto const& r : routes) {
    auto const n = r.stops.size();
    for (int dir = 0; dir < 2; ++dir) {
      auto const count = dir == 0 ? r.n_forward : r.n_reverse;
      for (int k = 0; k < count; ++k) {
        auto t = sched_depart(r, dir, k);
        for (std::size_t i = 0; i < n; ++i) {
          if (i > 0) {
            t += r.seg_s[dir == 0 ? i - 1 : n - 1 - i];
          }
          auto const fi = forward_index(r, dir, i);
          auto& row = out.schedule_csv;
          row += r.id;
          row += ',';
          row += trip_id(r, dir, k);
          row += ',';
          text::append_int(row, static_cast<std::int64_t>(i + 1));
          row += ",Stop ";
          row += r.stop_ids[fi];
          row += ',';
          row += format_service_time(ServiceTime{static_cast<std::int32_t>(t)});
          row += ',';
          append_fixed7(row, r.stops[fi].lat);
          row += ',';
          append_fixed7(row, r.stops[fi].lon);
          row += ",ALL,";
          row += r.stop_ids[fi];
          row += '\n';
        }
      }
    }
  }

  out.gps_csv = std::string{kGpsHeader} + "\n";
  auto const start = parse_date(sc.start_date);
  auto const noise = sc.speed_noise_pct / 100.0;
  auto const dropout = sc.dropout_pct / 100.0;
  auto const bunch = sc.bunch_pct / 100.0;

  for (int day = 0; day < sc.days; ++day) {
    auto const date = start + day;
    auto const date_s = format_date(date);
    auto const base = tz.resolve(date, ServiceTime{0});

    for (std::size_t ri = 0; ri < routes.size(); ++ri) {
      auto const& r = routes[ri];
      auto const n = r.stops.size();
      std::vector<VehicleTrip> vts;
      std::vector<Bus> buses;
      for (int dir = 0; dir < 2; ++dir) {
        auto const pool = dir == 0 ? r.buses_f : r.buses_r;
        for (int b = 0; b < pool; ++b) {
          Bus bus;
          bus.bus_id = std::to_string(1000 + static_cast<int>(ri) * 100 +
                                      dir * 50 + b);
          bus.run_id = std::to_string(dir + 1);
          bus.dir = dir;
          buses.push_back(std::move(bus));
        }
      }
      auto const pool_base = [&](int dir) {
        return dir == 0 ? std::size_t{0} : static_cast<std::size_t>(r.buses_f);
      };
      int shadow_count = 0;

      for (int dir = 0; dir < 2; ++dir) {
        auto const count = dir == 0 ? r.n_forward : r.n_reverse;
        auto const pool = dir == 0 ? r.buses_f : r.buses_r;
        for (int k = 0; k < count; ++k) {
          auto const z = rng.normal();
          auto const delay = std::clamp<std::int64_t>(
              std::llround(sc.delay_mean_s + sc.delay_sd_s * z),
              Scenario::kDelayMinS, Scenario::kDelayMaxS);
          VehicleTrip v;
          v.dir = dir;
          v.depart = base + sched_depart(r, dir, k) + delay;
          v.cum_s.assign(n, 0);
          v.cum_m.assign(n, 0.0);
          for (std::size_t i = 1; i < n; ++i) {
            auto const seg = r.seg_s[dir == 0 ? i - 1 : n - 1 - i];
            auto const len = Scenario::kSpeedMps * static_cast<double>(seg);
            auto dur = seg;
            if (noise > 0.0) {
              auto const mult = 1.0 + (2.0 * rng.uniform() - 1.0) * noise;
              auto const raw = len / (Scenario::kSpeedMps * mult);
              // odd durations keep pings off the segment midpoints
              dur = 2 * std::llround((raw - 1.0) / 2.0) + 1;
              dur = std::max<std::int64_t>(dur, 1);
            }
            v.cum_s[i] = v.cum_s[i - 1] + dur;
            v.cum_m[i] = v.cum_m[i - 1] + len;
          }
          v.arrive = v.depart + v.cum_s.back();
          auto const shadow = bunch > 0.0 && rng.bernoulli(bunch);

          auto const add_run = [&](Bus const& bus, VehicleTrip trip) {
            TruthRun tr;
            tr.route = r.id;
            tr.bus_id = bus.bus_id;
            tr.run_id = bus.run_id;
            tr.trip = trip_id(r, dir, k);
            tr.service_date = date_s;
            tr.direction = dir == 0 ? "forward" : "reverse";
            tr.depart = trip.depart;
            tr.arrive = trip.arrive;
            for (std::size_t i = 0; i < n; ++i) {
              tr.arrivals.push_back({static_cast<int>(i + 1),
                                     r.stop_ids[forward_index(r, dir, i)],
                                     trip.depart + trip.cum_s[i], false});
            }
            trip.truth = out.truth.runs.size();
            out.truth.runs.push_back(std::move(tr));
            vts.push_back(std::move(trip));
            return vts.size() - 1;
          };

          auto& bus = buses[pool_base(dir) + static_cast<std::size_t>(k % pool)];
          bus.trips.push_back(add_run(bus, v));
          if (shadow) {
            Bus extra;
            extra.bus_id = std::to_string(5000 + static_cast<int>(ri) * 100 +
                                          shadow_count++);
            extra.run_id = "9";
            extra.dir = dir;
            auto sv = v;
            sv.depart += Scenario::kBunchOffsetS;
            sv.arrive += Scenario::kBunchOffsetS;
            extra.trips.push_back(add_run(extra, std::move(sv)));
            buses.push_back(std::move(extra));
          }
        }
      }

      // Scheduled trips of the day, for the oracle.
      for (int dir = 0; dir < 2; ++dir) {
        auto const count = dir == 0 ? r.n_forward : r.n_reverse;
        for (int k = 0; k < count; ++k) {
          TruthTrip tt;
          tt.route = r.id;
          tt.trip = trip_id(r, dir, k);
          tt.service_date = date_s;
          tt.direction = dir == 0 ? "forward" : "reverse";
          auto t = sched_depart(r, dir, k);
          for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) {
              t += r.seg_s[dir == 0 ? i - 1 : n - 1 - i];
            }
            tt.stop_times.push_back({static_cast<int>(i + 1),
                                     r.stop_ids[forward_index(r, dir, i)],
                                     static_cast<std::int32_t>(t), base + t});
          }
          out.truth.trips.push_back(std::move(tt));
        }
      }

      // Pings, bus by bus.
      for (auto& bus : buses) {
        if (bus.trips.empty()) {
          continue;
        }
        for (std::size_t i = 1; i < bus.trips.size(); ++i) {
          auto const& prev = vts[bus.trips[i - 1]];
          auto const& next = vts[bus.trips[i]];
          if (next.depart - prev.arrive < Scenario::kMinLayoverS) {
            throw invariant_error("synth: bus layover shorter than minimum");
          }
        }
        bus.appear = vts[bus.trips.front()].depart - Scenario::kMinLayoverS;
        auto const last = vts[bus.trips.back()].arrive;
        auto const phase = rng.uniform_int(0, sc.gps_interval_s - 1);
        std::optional<int> last_index;  // along-trip index of last kept ping
        std::size_t ti = 0;
        for (auto t = bus.appear + phase; t <= last; t += sc.gps_interval_s) {
          while (ti < bus.trips.size() && t > vts[bus.trips[ti]].arrive) {
            ++ti;
          }
          auto& v = vts[bus.trips[ti]];
          auto const moving = t >= v.depart;
          auto const along = moving ? along_m(v, t) : 0.0;
          auto const index = moving ? nearest_index(v, along) : 0;
          if (dropout > 0.0 && rng.bernoulli(dropout)) {
            continue;
          }
          if (moving && index != 0) {
            if (!v.seen_progress) {
              v.seen_progress = true;
              v.pred_index = last_index;
            }
            v.progress.push_back(t);
          }
          last_index = index;
          auto const p = position(r, bus.dir, along);
          auto& row = out.gps_csv;
          row += r.id;
          row += ',';
          row += bus.bus_id;
          row += ',';
          row += bus.run_id;
          row += ',';
          text::append_int(row, t);
          row += ',';
          append_fixed7(row, p.lat);
          row += ',';
          append_fixed7(row, p.lon);
          row += '\n';
          ++out.gps_records;
        }
      }

      // Expected run content and observability.
      for (auto const& v : vts) {
        auto& tr = out.truth.runs[v.truth];
        tr.progress_pings = static_cast<int>(v.progress.size());
        std::vector<EpochSeconds> kept = v.progress;
        bool merged = false;
        if (!kept.empty()) {
          // The first progress ping only gets the run's trend from a
          // predecessor that sits behind it.
          auto const first_index = nearest_index(v, along_m(v, kept.front()));
          if (!v.pred_index || *v.pred_index > first_index) {
            kept.erase(kept.begin());
          } else if (*v.pred_index == first_index) {
            merged = true;
          }
        }
        tr.run_pings = static_cast<int>(kept.size());
        tr.recovered = !merged && tr.run_pings >= sc.min_run_records;
        if (!tr.recovered) {
          continue;
        }
        for (auto& a : tr.arrivals) {
          a.observable = kept.front() <= a.time && kept.back() >= a.time;
        }
      }
    }
  }
  return out;
}

void write_generated(Generated const& g, Scenario const& scenario,
                     std::filesystem::path const& dir) {
  std::filesystem::create_directories(dir);
  auto const write = [&](char const* name, std::string const& body) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) {
      throw io_error("cannot write " + (dir / name).string());
    }
    f << body;
  };
  write("schedule.csv", g.schedule_csv);
  write("gps.csv", g.gps_csv);
  write("scenario.json", scenario.to_json().dump(2) + "\n");
  if (scenario.write_truth) {
    write("truth.json", g.truth.to_json().dump() + "\n");
  }
}

namespace {

// Sakamoto's method, Monday = 1.
int weekday_of(std::string const& date) {
  int y = std::stoi(date.substr(0, 4));
  int const m = std::stoi(date.substr(5, 2));
  int const d = std::stoi(date.substr(8, 2));
  static constexpr int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
  if (m < 3) {
    y -= 1;
  }
  auto const sun0 = (y + y / 4 - y / 100 + y / 400 + t[m - 1] + d) % 7;
  return sun0 == 0 ? 7 : sun0;
}

struct Totals {
  std::int64_t scheduled{};
  std::int64_t on_time{};
  std::int64_t bunching{};
  std::vector<std::int64_t> delays;
  std::vector<std::int64_t> waits;
};

} // namespace

OracleResult oracle_metrics(GroundTruth const& truth, OnTimeWindow const& w) {
  using SlotKey = std::tuple<std::string, std::string, std::string, int>;
  std::map<SlotKey, std::vector<std::int64_t>> arrivals;  // true times
  std::set<std::tuple<std::string, std::string, std::string>> served;
  std::set<std::tuple<std::string, std::string, std::string>> active;
  for (auto const& r : truth.runs) {
    if (!r.recovered) {
      continue;
    }
    active.emplace(r.route, r.service_date, r.direction);
    for (auto const& a : r.arrivals) {
      if (a.observable) {
        arrivals[{r.route, r.service_date, r.trip, a.seq}].push_back(a.time);
        served.emplace(r.route, r.service_date, r.trip);
      }
    }
  }

  OracleResult out;
  std::vector<int> hours;
  for (auto const& t : truth.trips) {
    auto const is_served = served.count({t.route, t.service_date, t.trip}) > 0;
    auto const is_active =
        active.count({t.route, t.service_date, t.direction}) > 0;
    for (auto const& st : t.stop_times) {
      OracleSlot s;
      s.route = t.route;
      s.stop_id = st.stop_id;
      s.trip = t.trip;
      s.service_date = t.service_date;
      s.seq = st.seq;
      auto const it = arrivals.find({t.route, t.service_date, t.trip, st.seq});
      if (it == arrivals.end()) {
        if (is_served || !is_active) {
          continue;
        }
        s.missed = true;
      } else {
        int in_window = 0;
        for (auto const a : it->second) {
          auto const d = a - st.scheduled;
          s.delays.push_back(d);
          if (d >= -w.early_s && d <= w.late_s) {
            ++in_window;
          }
          if (d >= 0 && (!s.waiting_s || d < *s.waiting_s)) {
            s.waiting_s = d;
          }
        }
        s.on_time = in_window >= 1;
        s.bunching = in_window >= 2;
      }
      hours.push_back((st.service_s / 3600) % 24);
      out.slots.push_back(std::move(s));
    }
  }

  using CellKey = std::tuple<int, std::string, std::string, std::string, int, int>;
  std::map<CellKey, Totals> cells;
  for (std::size_t i = 0; i < out.slots.size(); ++i) {
    auto const& s = out.slots[i];
    int const buckets[4][2] = {{0, 0},
                               {1, hours[i]},
                               {2, weekday_of(s.service_date)},
                               {3, std::stoi(s.service_date.substr(5, 2))}};
    CellKey const scopes[4] = {{0, "", "", "", 0, 0},
                               {1, s.route, "", "", 0, 0},
                               {2, s.route, s.stop_id, "", 0, 0},
                               {3, s.route, s.stop_id, s.trip, 0, 0}};
    for (auto const& scope : scopes) {
      for (auto const& b : buckets) {
        auto key = scope;
        std::get<4>(key) = b[0];
        std::get<5>(key) = b[1];
        auto& tot = cells[key];
        ++tot.scheduled;
        tot.on_time += s.on_time;
        tot.bunching += s.bunching;
        tot.delays.insert(tot.delays.end(), s.delays.begin(), s.delays.end());
        if (s.waiting_s) {
          tot.waits.push_back(*s.waiting_s);
        }
      }
    }
  }

  static char const* const scope_names[] = {"system", "route", "stop", "trip"};
  static char const* const bucket_names[] = {"all", "hour_of_day", "day_of_week",
                                             "month"};
  auto const mean = [](std::vector<std::int64_t> const& v,
                       bool absolute) -> std::optional<double> {
    if (v.empty()) {
      return std::nullopt;
    }
    double sum = 0.0;
    for (auto const d : v) {
      sum += static_cast<double>(absolute && d < 0 ? -d : d);
    }
    return sum / static_cast<double>(v.size());
  };
  for (auto const& [key, tot] : cells) {
    OracleCell c;
    c.scope = scope_names[std::get<0>(key)];
    c.route = std::get<1>(key);
    c.stop = std::get<2>(key);
    c.trip = std::get<3>(key);
    c.bucket = bucket_names[std::get<4>(key)];
    c.value = std::get<5>(key);
    c.n_scheduled = tot.scheduled;
    c.n_on_time = tot.on_time;
    c.n_bunching = tot.bunching;
    c.reliability_pct = 100.0 * static_cast<double>(tot.on_time) /
                        static_cast<double>(tot.scheduled);
    c.bunching_pct = 100.0 * static_cast<double>(tot.bunching) /
                     static_cast<double>(tot.scheduled);
    c.deviation_mean_s = mean(tot.delays, false);
    c.deviation_mean_abs_s = mean(tot.delays, true);
    c.waiting_mean_s = mean(tot.waits, false);
    out.cells.push_back(std::move(c));
  }
  return out;
}

nlohmann::ordered_json OracleResult::to_json() const {
  auto const opt = [](std::optional<double> const& v) -> nlohmann::ordered_json {
    if (v) {
      return *v;
    }
    return nullptr;
  };
  nlohmann::ordered_json j;
  auto& cj = j["cells"] = nlohmann::ordered_json::array();
  for (auto const& c : cells) {
    nlohmann::ordered_json o;
    o["scope"] = c.scope;
    if (c.scope != "system") {
      o["route"] = c.route;
    }
    if (c.scope == "stop" || c.scope == "trip") {
      o["stop"] = c.stop;
    }
    if (c.scope == "trip") {
      o["trip"] = c.trip;
    }
    o["bucket"] = c.bucket;
    if (c.bucket != "all") {
      o["value"] = c.value;
    }
    o["n_scheduled"] = c.n_scheduled;
    o["n_on_time"] = c.n_on_time;
    o["n_bunching"] = c.n_bunching;
    o["reliability_pct"] = c.reliability_pct;
    o["bunching_pct"] = c.bunching_pct;
    o["deviation_mean_s"] = opt(c.deviation_mean_s);
    o["deviation_mean_abs_s"] = opt(c.deviation_mean_abs_s);
    o["waiting_mean_s"] = opt(c.waiting_mean_s);
    cj.push_back(std::move(o));
  }
  auto& sj = j["slots"] = nlohmann::ordered_json::array();
  for (auto const& s : slots) {
    nlohmann::ordered_json o;
    o["route"] = s.route;
    o["stop_id"] = s.stop_id;
    o["trip"] = s.trip;
    o["service_date"] = s.service_date;
    o["seq"] = s.seq;
    o["missed"] = s.missed;
    o["on_time"] = s.on_time;
    o["bunching"] = s.bunching;
    o["waiting_s"] = s.waiting_s ? nlohmann::ordered_json(*s.waiting_s)
                                 : nlohmann::ordered_json(nullptr);
    o["delays"] = s.delays;
    sj.push_back(std::move(o));
  }
  return j;
}

} // namespace transit::synth
