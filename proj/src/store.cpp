#include "transit/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "transit/text.hpp"

namespace transit {

namespace fs = std::filesystem;

std::string read_file(fs::path const& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error("cannot open " + path.string());
  }
  std::string body;
  in.seekg(0, std::ios::end);
  auto const size = in.tellg();
  if (size > 0) {
    body.resize(static_cast<std::size_t>(size));
    in.seekg(0);
    in.read(body.data(), size);
  }
  if (in.bad()) {
    throw io_error("read failure on " + path.string());
  }
  return body;
}

void write_file(fs::path const& path, std::string_view const body) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw io_error("cannot write " + tmp.string());
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
      throw io_error("write failure on " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

StoreLock::StoreLock(fs::path const& root, bool const exclusive) {
  fs::create_directories(root);
  auto const path = (root / ".lock").string();
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
  if (fd_ < 0) {
    throw io_error("cannot open lock file " + path + ": " + std::strerror(errno));
  }
  if (::flock(fd_, (exclusive ? LOCK_EX : LOCK_SH) | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw io_error("store " + root.string() + " is locked by another process");
  }
}

StoreLock::~StoreLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::string Partition::key() const { return format_date(date) + "/" + route; }

Store::Store(fs::path root) : root_{std::move(root)} {}

namespace {

fs::path partition_path(fs::path const& root, char const* kind,
                        Partition const& p, char const* ext) {
  return root / kind / ("date=" + format_date(p.date)) /
         ("route=" + p.route + ext);
}

} // namespace

fs::path Store::gps_path(Partition const& p) const {
  return partition_path(root_, "gps", p, ".csv");
}

fs::path Store::runs_path(Partition const& p) const {
  return partition_path(root_, "runs", p, ".jsonl");
}

fs::path Store::estimates_path(Partition const& p) const {
  return partition_path(root_, "estimates", p, ".jsonl");
}

fs::path Store::schedule_path() const { return root_ / "schedule" / "routes.csv"; }
fs::path Store::analytics_dir() const { return root_ / "analytics"; }
fs::path Store::cells_path() const { return analytics_dir() / "cells.jsonl"; }
fs::path Store::summary_path() const { return analytics_dir() / "summary.json"; }
fs::path Store::manifest_path() const { return root_ / "manifest.json"; }

std::vector<Partition> Store::gps_partitions() const {
  std::vector<Partition> out;
  auto const dir = root_ / "gps";
  if (!fs::exists(dir)) {
    return out;
  }
  for (auto const& date_dir : fs::directory_iterator(dir)) {
    auto const dname = date_dir.path().filename().string();
    if (!date_dir.is_directory() || dname.rfind("date=", 0) != 0) {
      continue;
    }
    auto const date = parse_date(dname.substr(5));
    for (auto const& f : fs::directory_iterator(date_dir.path())) {
      auto const fname = f.path().filename().string();
      if (fname.rfind("route=", 0) != 0 || f.path().extension() != ".csv") {
        continue;
      }
      out.push_back({date, fname.substr(6, fname.size() - 6 - 4)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Store::has_schedule() const { return fs::exists(schedule_path()); }

Schedule Store::load_schedule() const {
  if (!has_schedule()) {
    throw no_schedule_error("store has no schedule; run ingest-schedule first");
  }
  std::istringstream in(read_file(schedule_path()));
  return ingest_schedule(in);
}

nlohmann::json Store::load_manifest() const {
  if (!fs::exists(manifest_path())) {
    return nlohmann::json{{"version", kStoreVersion},
                          {"partitions", nlohmann::json::object()}};
  }
  auto j = nlohmann::json::parse(read_file(manifest_path()));
  if (j.value("version", 0) != kStoreVersion) {
    throw format_error("unsupported store version in " +
                       manifest_path().string());
  }
  return j;
}

void Store::save_manifest(nlohmann::json const& manifest) const {
  write_file(manifest_path(), manifest.dump(2) + "\n");
}

std::vector<GpsRecord> load_gps_partition(fs::path const& path,
                                          TimeContext const& tz) {
  std::istringstream in(read_file(path));
  return ingest_gps(in, tz, 0.0).records;
}

std::string gps_partition_body(std::vector<GpsRecord>& records) {
  auto const key = [](GpsRecord const& r) {
    return std::tie(r.bus_id, r.run_id, r.time, r.pos.lat, r.pos.lon, r.route);
  };
  std::sort(records.begin(), records.end(),
            [&](GpsRecord const& a, GpsRecord const& b) { return key(a) < key(b); });
  records.erase(std::unique(records.begin(), records.end()), records.end());
  std::string body{kGpsHeader};
  body += '\n';
  body.reserve(records.size() * 48);
  for (auto const& r : records) {
    append_gps_row(body, r);
  }
  return body;
}

int direction_id(Direction const d, PreprocessConfig const& config) {
  return d == Direction::forward ? config.forward_direction_id
                                 : config.reverse_direction_id;
}

void append_run_json(std::string& out, GpsRun const& run, TimeContext const& tz,
                     PreprocessConfig const& config) {
  auto const dir = run.direction.value_or(Direction::forward);
  out += "{\"route\":";
  text::append_json_string(out, run.route);
  out += ",\"bus_id\":";
  text::append_json_string(out, run.bus_id);
  out += ",\"run_id\":";
  text::append_json_string(out, run.run_id);
  out += ",\"service_date\":\"";
  out += format_date(run.service_date);
  out += "\",\"direction\":\"";
  out += to_string(dir);
  out += "\",\"direction_id\":";
  text::append_int(out, direction_id(dir, config));
  out += ",\"start\":\"";
  tz.append_iso(out, run.start_time());
  out += "\",\"end\":\"";
  tz.append_iso(out, run.end_time());
  out += "\",\"n_records\":";
  text::append_int(out, static_cast<std::int64_t>(run.records.size()));
  out += ",\"records\":[";
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    auto const& r = run.records[i];
    if (i > 0) {
      out += ',';
    }
    out += '[';
    text::append_int(out, r.rec.time);
    out += ',';
    text::append_double(out, r.rec.pos.lat);
    out += ',';
    text::append_double(out, r.rec.pos.lon);
    out += ',';
    text::append_int(out, r.seq);
    out += ',';
    text::append_double(out, r.dist_m);
    out += ']';
  }
  out += "]}\n";
}

namespace {

template <typename F>
void for_each_line(std::string_view body, F&& f) {
  while (!body.empty()) {
    auto const nl = body.find('\n');
    auto const line = text::trim(body.substr(0, nl));
    if (!line.empty()) {
      f(line);
    }
    if (nl == std::string_view::npos) {
      break;
    }
    body.remove_prefix(nl + 1);
  }
}

} // namespace

std::vector<GpsRun> parse_runs_jsonl(std::string_view const body) {
  std::vector<GpsRun> out;
  for_each_line(body, [&](std::string_view line) {
    auto const j = nlohmann::json::parse(line);
    GpsRun run;
    run.route = j.at("route").get<std::string>();
    run.bus_id = j.at("bus_id").get<std::string>();
    run.run_id = j.at("run_id").get<std::string>();
    run.service_date = parse_date(j.at("service_date").get<std::string>());
    auto const dir = parse_direction(j.at("direction").get<std::string>());
    run.direction = dir;
    auto const trend = dir == Direction::forward ? 1 : -1;
    for (auto const& r : j.at("records")) {
      MappedRecord m;
      m.rec = GpsRecord{run.route, run.bus_id, run.run_id,
                        r.at(0).get<EpochSeconds>(),
                        GeoPoint{r.at(1).get<double>(), r.at(2).get<double>()}};
      m.seq = r.at(3).get<int>();
      m.dist_m = r.at(4).get<double>();
      m.trend = trend;
      m.dir = dir;
      run.records.push_back(std::move(m));
    }
    if (run.records.empty()) {
      throw format_error("run without records in runs file");
    }
    out.push_back(std::move(run));
  });
  return out;
}

void append_estimate_json(std::string& out, ArrivalEstimate const& e,
                          TimeContext const& tz, PreprocessConfig const& config) {
  out += "{\"route\":";
  text::append_json_string(out, e.route);
  out += ",\"trip\":";
  text::append_json_string(out, e.trip);
  out += ",\"service_date\":\"";
  out += format_date(e.service_date);
  out += "\",\"bus_id\":";
  text::append_json_string(out, e.run.bus_id);
  out += ",\"run_id\":";
  text::append_json_string(out, e.run.run_id);
  out += ",\"run_start\":\"";
  tz.append_iso(out, e.run.start);
  out += "\",\"direction\":\"";
  out += to_string(e.direction);
  out += "\",\"direction_id\":";
  text::append_int(out, direction_id(e.direction, config));
  out += ",\"is_primary\":";
  out += e.is_primary ? "true" : "false";
  out += ",\"score_m\":";
  text::append_double(out, e.score_m);
  out += ",\"seq\":";
  text::append_int(out, e.seq);
  out += ",\"stop_id\":";
  text::append_json_string(out, e.stop_id);
  out += ",\"scheduled_time\":\"";
  out += format_service_time(e.scheduled_time);
  out += "\",\"scheduled\":\"";
  tz.append_iso(out, e.scheduled);
  out += "\",\"estimated\":";
  if (e.estimated) {
    out += '"';
    tz.append_iso(out, *e.estimated);
    out += '"';
  } else {
    out += "null";
  }
  out += ",\"delay_s\":";
  if (e.delay_s) {
    text::append_int(out, *e.delay_s);
  } else {
    out += "null";
  }
  out += ",\"method\":\"";
  out += to_string(e.method);
  out += "\"}\n";
}

std::vector<ArrivalEstimate> parse_estimates_jsonl(std::string_view const body) {
  std::vector<ArrivalEstimate> out;
  for_each_line(body, [&](std::string_view line) {
    auto const j = nlohmann::json::parse(line);
    ArrivalEstimate e;
    e.route = j.at("route").get<std::string>();
    e.trip = j.at("trip").get<std::string>();
    e.service_date = parse_date(j.at("service_date").get<std::string>());
    e.run.bus_id = j.at("bus_id").get<std::string>();
    e.run.run_id = j.at("run_id").get<std::string>();
    e.run.start = parse_iso(j.at("run_start").get<std::string>());
    e.direction = parse_direction(j.at("direction").get<std::string>());
    e.is_primary = j.at("is_primary").get<bool>();
    e.score_m = j.at("score_m").get<double>();
    e.seq = j.at("seq").get<int>();
    e.stop_id = j.at("stop_id").get<std::string>();
    e.scheduled_time = parse_service_time(j.at("scheduled_time").get<std::string>());
    e.scheduled = parse_iso(j.at("scheduled").get<std::string>());
    if (auto const& est = j.at("estimated"); !est.is_null()) {
      e.estimated = parse_iso(est.get<std::string>());
    }
    if (auto const& d = j.at("delay_s"); !d.is_null()) {
      e.delay_s = d.get<std::int64_t>();
    }
    auto const method = j.at("method").get<std::string>();
    e.method = method == "interpolated" ? EstimateMethod::interpolated
                                        : EstimateMethod::unestimated;
    out.push_back(std::move(e));
  });
  return out;
}

} // namespace transit
