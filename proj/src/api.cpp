#include "transit/api.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <tuple>

#include "httplib.h"
#include "json.hpp"
#include "transit/preprocess.hpp"
#include "transit/text.hpp"

namespace transit {

namespace fs = std::filesystem;

ApiResponse api_error(int const status, std::string_view const code,
                      std::string_view const message) {
  nlohmann::ordered_json j{
      {"error", {{"code", std::string{code}}, {"message", std::string{message}}}}};
  return {status, j.dump()};
}

ApiService::ApiService(Store store) : store_{std::move(store)} {
  auto const manifest = store_.load_manifest();
  nlohmann::ordered_json stages{{"partitions", 0},
                                {"preprocess_complete", 0},
                                {"estimate_complete", 0},
                                {"analytics", "missing"}};
  if (manifest.contains("partitions")) {
    int n = 0;
    int pre = 0;
    int est = 0;
    for (auto const& [key, e] : manifest["partitions"].items()) {
      ++n;
      pre += e.contains("preprocess") && e["preprocess"].value("status", "") == "complete";
      est += e.contains("estimate") && e["estimate"].value("status", "") == "complete";
    }
    stages["partitions"] = n;
    stages["preprocess_complete"] = pre;
    stages["estimate_complete"] = est;
  }
  if (manifest.contains("analytics")) {
    stages["analytics"] = manifest["analytics"].value("status", "missing");
  }
  stage_status_ = stages.dump();

  if (store_.has_schedule()) {
    schedule_ = store_.load_schedule();
  }
  if (!fs::exists(store_.summary_path()) || !fs::exists(store_.cells_path())) {
    unavailable_reason_ = "analytics have not been computed for this store";
    return;
  }
  summary_ = read_file(store_.summary_path());
  auto const cells = read_file(store_.cells_path());
  std::string_view rest{cells};
  while (!rest.empty()) {
    auto const nl = rest.find('\n');
    auto const line = text::trim(rest.substr(0, nl));
    rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
    if (line.empty()) {
      continue;
    }
    auto const j = nlohmann::json::parse(line);
    auto const scope = j.at("scope").get<std::string>();
    CellLine cell{j.at("bucket").get<std::string>(), std::string{line}};
    if (scope == "route") {
      route_cells_[j.at("route").get<std::string>()].push_back(std::move(cell));
    } else if (scope == "stop") {
      stop_cells_[{j.at("route").get<std::string>(), j.at("stop").get<std::string>()}]
          .push_back(std::move(cell));
    } else if (scope == "trip") {
      trip_cells_[{j.at("route").get<std::string>(), j.at("stop").get<std::string>(),
                   j.at("trip").get<std::string>()}]
          .push_back(std::move(cell));
    }
  }
  available_ = true;
}

namespace {

std::vector<std::string> split_path(std::string_view path) {
  auto const q = path.find('?');
  if (q != std::string_view::npos) {
    path = path.substr(0, q);
  }
  std::vector<std::string> out;
  while (!path.empty()) {
    auto const slash = path.find('/');
    auto const part = path.substr(0, slash);
    if (!part.empty()) {
      out.emplace_back(part);
    }
    if (slash == std::string_view::npos) {
      break;
    }
    path.remove_prefix(slash + 1);
  }
  return out;
}

template <typename List>
void append_groups(std::string& out, List const* cells) {
  static constexpr char const* kinds[] = {"all", "hour_of_day", "day_of_week",
                                          "month"};
  out += '{';
  for (std::size_t k = 0; k < 4; ++k) {
    if (k > 0) {
      out += ',';
    }
    out += '"';
    out += kinds[k];
    out += "\":[";
    bool first = true;
    if (cells != nullptr) {
      for (auto const& c : *cells) {
        if (c.bucket != kinds[k]) {
          continue;
        }
        if (!first) {
          out += ',';
        }
        first = false;
        out += c.json;
      }
    }
    out += ']';
  }
  out += '}';
}

template <typename Map, typename Key>
auto const* find_cells(Map const& m, Key const& k) {
  auto const it = m.find(k);
  return it == m.end() ? nullptr : &it->second;
}

void append_stop_json(std::string& out, Stop const& s) {
  out += "{\"stop_id\":";
  text::append_json_string(out, s.stop_id);
  out += ",\"name\":";
  text::append_json_string(out, s.name);
  out += ",\"lat\":";
  text::append_double(out, s.pos.lat);
  out += ",\"lon\":";
  text::append_double(out, s.pos.lon);
  out += '}';
}

} // namespace

ApiResponse ApiService::unavailable() const {
  std::string body = "{\"error\":{\"code\":\"analytics_unavailable\",\"message\":";
  text::append_json_string(body, unavailable_reason_);
  body += ",\"stages\":";
  body += stage_status_;
  body += "}}";
  return {503, body};
}

ApiResponse ApiService::handle(std::string_view const path) const {
  auto const parts = split_path(path);
  if (parts.empty() || parts[0] != "api") {
    return api_error(404, "not_found", "unknown endpoint");
  }
  if (!available_) {
    return unavailable();
  }
  if (parts.size() == 2 && parts[1] == "overview") {
    return overview();
  }
  if (parts.size() >= 2 && parts[1] == "routes") {
    switch (parts.size()) {
    case 2: return routes();
    case 3: return route(parts[2]);
    case 5:
      if (parts[3] == "stops") {
        return stop(parts[2], parts[4]);
      }
      break;
    case 7:
      if (parts[3] == "stops" && parts[5] == "trips") {
        return trip(parts[2], parts[4], parts[6]);
      }
      break;
    default: break;
    }
  }
  return api_error(404, "not_found", "unknown endpoint");
}

ApiResponse ApiService::overview() const { return {200, summary_}; }

ApiResponse ApiService::routes() const {
  std::string body = "{\"routes\":[";
  bool first = true;
  for (auto const& [id, trips] : schedule_.routes) {
    if (!first) {
      body += ',';
    }
    first = false;
    std::set<std::string> stops;
    for (auto const& t : trips) {
      for (auto const& st : t.stop_times) {
        stops.insert(st.stop);
      }
    }
    body += "{\"route\":";
    text::append_json_string(body, id);
    body += ",\"stops\":";
    text::append_int(body, static_cast<std::int64_t>(stops.size()));
    body += ",\"trips\":";
    text::append_int(body, static_cast<std::int64_t>(trips.size()));
    body += ",\"headline\":";
    std::string const* headline = nullptr;
    if (auto const* cells = find_cells(route_cells_, id)) {
      for (auto const& c : *cells) {
        if (c.bucket == "all") {
          headline = &c.json;
          break;
        }
      }
    }
    body += headline != nullptr ? *headline : std::string{"null"};
    body += '}';
  }
  body += "]}";
  return {200, body};
}

ApiResponse ApiService::route(std::string const& r) const {
  auto const* trips = schedule_.trips_for(r);
  if (trips == nullptr) {
    return api_error(404, "unknown_route", "no route '" + r + "'");
  }
  // Parent-trip stop order first, then any stop it does not visit.
  auto const parent = select_parent_trip(*trips);
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (auto const& t : *trips) {
    if (t.trip != parent.trip) {
      continue;
    }
    for (auto const& st : t.stop_times) {
      if (seen.insert(st.stop).second) {
        order.push_back(st.stop);
      }
    }
  }
  std::set<std::string> others;
  for (auto const& t : *trips) {
    for (auto const& st : t.stop_times) {
      if (!seen.count(st.stop)) {
        others.insert(st.stop);
      }
    }
  }
  order.insert(order.end(), others.begin(), others.end());

  std::string body = "{\"route\":";
  text::append_json_string(body, r);
  body += ",\"cells\":";
  append_groups(body, find_cells(route_cells_, r));
  body += ",\"stops\":[";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) {
      body += ',';
    }
    append_stop_json(body, schedule_.stops.at(order[i]));
  }
  body += "]}";
  return {200, body};
}

ApiResponse ApiService::stop(std::string const& r, std::string const& s) const {
  auto const* trips = schedule_.trips_for(r);
  if (trips == nullptr) {
    return api_error(404, "unknown_route", "no route '" + r + "'");
  }
  struct Visit {
    ScheduledTrip const* trip;
    StopTime const* st;
  };
  std::vector<Visit> visits;
  for (auto const& t : *trips) {
    for (auto const& st : t.stop_times) {
      if (st.stop == s) {
        visits.push_back({&t, &st});
      }
    }
  }
  if (visits.empty()) {
    return api_error(404, "unknown_stop",
                     "stop '" + s + "' is not served by route '" + r + "'");
  }
  std::sort(visits.begin(), visits.end(), [](Visit const& a, Visit const& b) {
    return std::tie(a.st->arrival, a.trip->trip, a.st->seq) <
           std::tie(b.st->arrival, b.trip->trip, b.st->seq);
  });
  std::string body = "{\"route\":";
  text::append_json_string(body, r);
  body += ",\"stop\":";
  append_stop_json(body, schedule_.stops.at(s));
  body += ",\"cells\":";
  append_groups(body, find_cells(stop_cells_, std::pair{r, s}));
  body += ",\"trips\":[";
  for (std::size_t i = 0; i < visits.size(); ++i) {
    auto const& v = visits[i];
    if (i > 0) {
      body += ',';
    }
    body += "{\"trip\":";
    text::append_json_string(body, v.trip->trip);
    body += ",\"service_id\":";
    text::append_json_string(body, v.trip->service);
    body += ",\"service_days\":";
    text::append_json_string(body, v.trip->service_days().describe());
    body += ",\"scheduled_time\":\"";
    body += format_service_time(v.st->arrival);
    body += "\",\"seq\":";
    text::append_int(body, v.st->seq);
    body += '}';
  }
  body += "]}";
  return {200, body};
}

ApiResponse ApiService::trip(std::string const& r, std::string const& s,
                             std::string const& t) const {
  auto const* trips = schedule_.trips_for(r);
  if (trips == nullptr) {
    return api_error(404, "unknown_route", "no route '" + r + "'");
  }
  bool stop_known = false;
  ScheduledTrip const* found = nullptr;
  StopTime const* visit = nullptr;
  for (auto const& trip : *trips) {
    for (auto const& st : trip.stop_times) {
      if (st.stop != s) {
        continue;
      }
      stop_known = true;
      if (trip.trip == t && visit == nullptr) {
        found = &trip;
        visit = &st;
      }
    }
  }
  if (!stop_known) {
    return api_error(404, "unknown_stop",
                     "stop '" + s + "' is not served by route '" + r + "'");
  }
  if (found == nullptr) {
    return api_error(404, "unknown_trip",
                     "trip '" + t + "' does not serve stop '" + s + "'");
  }
  std::string body = "{\"route\":";
  text::append_json_string(body, r);
  body += ",\"stop\":";
  text::append_json_string(body, s);
  body += ",\"trip\":";
  text::append_json_string(body, t);
  body += ",\"service_id\":";
  text::append_json_string(body, found->service);
  body += ",\"service_days\":";
  text::append_json_string(body, found->service_days().describe());
  body += ",\"scheduled_time\":\"";
  body += format_service_time(visit->arrival);
  body += "\",\"seq\":";
  text::append_int(body, visit->seq);
  body += ",\"cells\":";
  append_groups(body, find_cells(trip_cells_, std::tuple{r, s, t}));
  body += '}';
  return {200, body};
}

void serve(Store const& store, std::string const& host, int const port) {
  std::unique_ptr<ApiService> service;
  {
    StoreLock const lock{store.root(), false};
    service = std::make_unique<ApiService>(store);
  }
  httplib::Server server;
  server.Get(R"(/.*)", [&](httplib::Request const& req, httplib::Response& res) {
    auto const r = service->handle(req.path);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  if (!server.listen(host, port)) {
    throw io_error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

} // namespace transit
