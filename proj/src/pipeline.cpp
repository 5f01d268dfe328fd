#include "transit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "transit/estimate.hpp"
#include "transit/text.hpp"

namespace transit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json plain(nlohmann::ordered_json const& j) { return json::parse(j.dump()); }

} // namespace

DateRange DateRange::parse(std::string_view const text) {
  DateRange r;
  auto const dots = text.find("..");
  if (dots == std::string_view::npos) {
    r.first = r.last = parse_date(text);
    return r;
  }
  auto const a = text.substr(0, dots);
  auto const b = text.substr(dots + 2);
  if (!a.empty()) {
    r.first = parse_date(a);
  }
  if (!b.empty()) {
    r.last = parse_date(b);
  }
  if (r.first && r.last && *r.last < *r.first) {
    throw invalid_input_error("date range '" + std::string{text} +
                              "' ends before it starts");
  }
  return r;
}

std::string DateRange::to_string() const {
  return (first ? format_date(*first) : std::string{}) + ".." +
         (last ? format_date(*last) : std::string{});
}

nlohmann::ordered_json PipelineReport::to_json() const {
  auto const counts = [](StageCounts const& c) {
    return nlohmann::ordered_json{{"computed", c.computed},
                                  {"reused", c.reused},
                                  {"skipped", c.skipped},
                                  {"failed", c.failed}};
  };
  return {{"preprocess", counts(preprocess)},
          {"estimate", counts(estimate)},
          {"analytics_computed", analytics_computed},
          {"analytics_reused", analytics_reused},
          {"records_in", stats.records_in},
          {"duplicates", stats.duplicates},
          {"outliers", stats.outliers},
          {"idle_dropped", stats.idle_dropped},
          {"short_dropped", stats.short_dropped},
          {"short_runs", stats.short_runs},
          {"runs_forward", stats.runs_forward},
          {"runs_reverse", stats.runs_reverse},
          {"boundary_runs", stats.boundary_runs},
          {"runs_matched", runs_matched},
          {"runs_unmatched", runs_unmatched},
          {"estimates", estimates},
          {"interpolated", interpolated},
          {"cells", cells},
          {"routes_without_schedule", routes_without_schedule},
          {"failures", failures}};
}

namespace {

json& partition_entry(json& manifest, Partition const& p) {
  auto& e = manifest["partitions"][p.key()];
  if (e.is_null()) {
    e = json{{"date", format_date(p.date)}, {"route", p.route}};
  }
  return e;
}

// Schedule and GPS coverage, recomputed from the manifest.
void update_coverage(Store const& store, json& manifest) {
  std::set<std::string> schedule_routes;
  if (manifest.contains("schedule")) {
    for (auto const& r : manifest["schedule"]["route_ids"]) {
      schedule_routes.insert(r.get<std::string>());
    }
  }
  std::map<std::string, std::vector<Partition>> gps;
  for (auto const& p : store.gps_partitions()) {
    gps[p.route].push_back(p);
  }
  json ingested = json::object();
  json without_schedule = json::array();
  for (auto const& [route, parts] : gps) {
    ingested[route] = {{"first_date", format_date(parts.front().date)},
                       {"last_date", format_date(parts.back().date)},
                       {"partitions", parts.size()}};
    if (!schedule_routes.count(route)) {
      without_schedule.push_back(route);
    }
  }
  json without_gps = json::array();
  for (auto const& r : schedule_routes) {
    if (!gps.count(r)) {
      without_gps.push_back(r);
    }
  }
  manifest["ingested"] = std::move(ingested);
  manifest["coverage"] = {{"schedule_routes_without_gps", std::move(without_gps)},
                          {"gps_routes_without_schedule",
                           std::move(without_schedule)}};
}

template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  if (workers == 0) {
    workers = std::max(1U, std::thread::hardware_concurrency());
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      f(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (auto i = next++; i < n; i = next++) {
        f(i);
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
}

json stats_json(PreprocessStats const& s) {
  return {{"records_in", s.records_in},       {"duplicates", s.duplicates},
          {"outliers", s.outliers},           {"idle_dropped", s.idle_dropped},
          {"short_dropped", s.short_dropped}, {"short_runs", s.short_runs},
          {"runs_forward", s.runs_forward},   {"runs_reverse", s.runs_reverse},
          {"boundary_runs", s.boundary_runs}};
}

std::string schedule_hash(json const& manifest) {
  if (!manifest.contains("schedule")) {
    return {};
  }
  return manifest["schedule"].value("hash", std::string{});
}

bool stage_complete(json const& entry, char const* stage) {
  return entry.contains(stage) &&
         entry[stage].value("status", std::string{}) == "complete";
}

std::vector<GpsRun> preprocess_partition(std::vector<GpsRecord> records,
                                         ParentTrip const& parent,
                                         Config const& config,
                                         TimeContext const& tz,
                                         PreprocessStats& stats) {
  std::stable_sort(records.begin(), records.end(),
                   [](GpsRecord const& a, GpsRecord const& b) {
                     return std::tie(a.bus_id, a.run_id) <
                            std::tie(b.bus_id, b.run_id);
                   });
  std::vector<GpsRun> runs;
  std::size_t i = 0;
  while (i < records.size()) {
    auto j = i;
    while (j < records.size() && records[j].bus_id == records[i].bus_id &&
           records[j].run_id == records[i].run_id) {
      ++j;
    }
    std::vector<GpsRecord> group(std::make_move_iterator(records.begin() + i),
                                 std::make_move_iterator(records.begin() + j));
    auto result = preprocess_group(std::move(group), parent, config.preprocess, tz);
    stats += result.stats;
    std::sort(result.runs.begin(), result.runs.end(),
              [](GpsRun const& a, GpsRun const& b) {
                return a.start_time() < b.start_time();
              });
    runs.insert(runs.end(), std::make_move_iterator(result.runs.begin()),
                std::make_move_iterator(result.runs.end()));
    i = j;
  }
  return runs;
}

struct JobResult {
  bool pre_ran{};
  bool est_ran{};
  std::string error;
  PreprocessStats stats;
  std::string runs_hash;
  std::string estimates_hash;
  std::size_t runs_matched{};
  std::size_t runs_unmatched{};
  std::size_t estimates{};
  std::size_t interpolated{};
};

struct Job {
  Partition part;
  bool pre{};
  bool est{};
};

void write_stage_meta(Store const& store, char const* dir,
                      nlohmann::ordered_json const& section,
                      std::string const& hash) {
  nlohmann::ordered_json meta{{"store_version", kStoreVersion},
                              {"config_hash", hash},
                              {"config", section}};
  write_file(store.root() / dir / "_meta.json", meta.dump(2) + "\n");
}

PipelineReport run_stages(Store const& store, Config const& config,
                          PipelineOptions const& options, bool want_pre,
                          bool want_est) {
  config.validate();
  TimeContext const tz{config.core.timezone};
  PipelineReport report;
  auto manifest = store.load_manifest();
  auto const sched_hash = schedule_hash(manifest);
  auto const schedule = store.has_schedule() ? store.load_schedule() : Schedule{};

  std::map<std::string, RouteIndex> indexes;
  std::set<std::string> missing_routes;
  std::vector<Job> jobs;
  auto const pre_hash = config.preprocess_hash();
  auto const est_hash = config.estimate_hash();

  for (auto const& p : store.gps_partitions()) {
    if (!options.range.contains(p.date) ||
        (options.route && *options.route != p.route)) {
      continue;
    }
    auto& entry = partition_entry(manifest, p);
    auto const* trips = schedule.trips_for(p.route);
    if (trips == nullptr || trips->empty()) {
      missing_routes.insert(p.route);
      json const skipped{{"status", "skipped"}, {"reason", "no_schedule"}};
      if (want_pre) {
        entry["preprocess"] = skipped;
        ++report.preprocess.skipped;
      }
      if (want_est) {
        entry["estimate"] = skipped;
        ++report.estimate.skipped;
      }
      continue;
    }
    if (!indexes.count(p.route)) {
      indexes.emplace(p.route, RouteIndex{*trips});
    }

    auto const gps_hash =
        entry.contains("gps") ? entry["gps"].value("hash", std::string{}) : "";
    auto const pre_input = fnv1a_hex(gps_hash + "|" + sched_hash);
    auto const pre_fresh =
        stage_complete(entry, "preprocess") &&
        entry["preprocess"].value("config_hash", "") == pre_hash &&
        entry["preprocess"].value("input_hash", "") == pre_input &&
        fs::exists(store.runs_path(p));

    Job job{p, false, false};
    if (want_pre) {
      job.pre = !pre_fresh;
      if (pre_fresh) {
        ++report.preprocess.reused;
      }
    } else if (!pre_fresh) {
      entry["estimate"] = json{{"status", "failed"},
                               {"reason", "preprocess_incomplete"}};
      ++report.estimate.failed;
      report.failures.push_back(p.key() + ": preprocess incomplete");
      continue;
    }

    if (want_est) {
      auto fresh = false;
      if (!job.pre && stage_complete(entry, "estimate")) {
        auto const est_input = fnv1a_hex(
            entry["preprocess"].value("output_hash", "") + "|" + sched_hash);
        fresh = entry["estimate"].value("config_hash", "") == est_hash &&
                entry["estimate"].value("input_hash", "") == est_input &&
                fs::exists(store.estimates_path(p));
      }
      job.est = !fresh;
      if (fresh) {
        ++report.estimate.reused;
      }
    }
    if (job.pre || job.est) {
      jobs.push_back(std::move(job));
    }
  }

  std::vector<JobResult> results(jobs.size());
  parallel_for(jobs.size(), options.workers, [&](std::size_t k) {
    auto const& job = jobs[k];
    auto& res = results[k];
    auto const& index = indexes.at(job.part.route);
    try {
      std::vector<GpsRun> runs;
      if (job.pre) {
        auto records =
            load_gps_partition(store.gps_path(job.part), tz);
        runs = preprocess_partition(std::move(records), index.parent, config,
                                    tz, res.stats);
        std::string body;
        for (auto const& r : runs) {
          append_run_json(body, r, tz, config.preprocess);
        }
        write_file(store.runs_path(job.part), body);
        res.runs_hash = fnv1a_hex(body);
        res.pre_ran = true;
      } else {
        runs = parse_runs_jsonl(read_file(store.runs_path(job.part)));
      }
      if (job.est) {
        std::string body;
        for (auto const& run : runs) {
          auto const est = estimate_run(run, index, config.estimate, tz);
          if (est.matched()) {
            ++res.runs_matched;
          } else {
            ++res.runs_unmatched;
          }
          for (auto const& e : est.estimates) {
            append_estimate_json(body, e, tz, config.preprocess);
            ++res.estimates;
            res.interpolated += e.method == EstimateMethod::interpolated;
          }
        }
        write_file(store.estimates_path(job.part), body);
        res.estimates_hash = fnv1a_hex(body);
        res.est_ran = true;
      }
    } catch (std::exception const& e) {
      res.error = e.what();
    }
  });

  for (std::size_t k = 0; k < jobs.size(); ++k) {
    auto const& job = jobs[k];
    auto const& res = results[k];
    auto& entry = partition_entry(manifest, job.part);
    auto const gps_hash =
        entry.contains("gps") ? entry["gps"].value("hash", std::string{}) : "";
    if (job.pre) {
      if (res.pre_ran) {
        entry["preprocess"] = {{"status", "complete"},
                               {"config_hash", pre_hash},
                               {"input_hash", fnv1a_hex(gps_hash + "|" + sched_hash)},
                               {"output_hash", res.runs_hash},
                               {"stats", stats_json(res.stats)}};
        report.stats += res.stats;
        ++report.preprocess.computed;
      } else {
        entry["preprocess"] = {{"status", "failed"}, {"reason", res.error}};
        ++report.preprocess.failed;
      }
    }
    if (job.est) {
      if (res.est_ran) {
        entry["estimate"] = {
            {"status", "complete"},
            {"config_hash", est_hash},
            {"input_hash",
             fnv1a_hex(entry["preprocess"].value("output_hash", "") + "|" +
                       sched_hash)},
            {"output_hash", res.estimates_hash},
            {"runs_matched", res.runs_matched},
            {"runs_unmatched", res.runs_unmatched},
            {"estimates", res.estimates},
            {"interpolated", res.interpolated}};
        report.runs_matched += res.runs_matched;
        report.runs_unmatched += res.runs_unmatched;
        report.estimates += res.estimates;
        report.interpolated += res.interpolated;
        ++report.estimate.computed;
      } else {
        entry["estimate"] = {{"status", "failed"},
                             {"reason", res.error.empty() ? "preprocess failed"
                                                          : res.error}};
        ++report.estimate.failed;
      }
    }
    if (!res.error.empty()) {
      report.failures.push_back(job.part.key() + ": " + res.error);
    }
  }

  report.routes_without_schedule.assign(missing_routes.begin(),
                                        missing_routes.end());
  if (want_pre) {
    nlohmann::ordered_json section{{"core", config.to_json()["core"]},
                                   {"preprocess", config.to_json()["preprocess"]}};
    write_stage_meta(store, "runs", section, pre_hash);
  }
  if (want_est) {
    auto const full = config.to_json();
    nlohmann::ordered_json section{{"core", full["core"]},
                                   {"preprocess", full["preprocess"]},
                                   {"estimate", full["estimate"]}};
    write_stage_meta(store, "estimates", section, est_hash);
  }
  manifest["config"] = plain(config.to_json());
  update_coverage(store, manifest);
  store.save_manifest(manifest);
  return report;
}

void append_cell_group(std::string& out, std::vector<MetricCell const*> const& cells) {
  static constexpr BucketKind kinds[] = {BucketKind::all, BucketKind::hour_of_day,
                                         BucketKind::day_of_week, BucketKind::month};
  out += '{';
  for (std::size_t k = 0; k < 4; ++k) {
    if (k > 0) {
      out += ',';
    }
    out += '"';
    out += to_string(kinds[k]);
    out += "\":[";
    bool first = true;
    for (auto const* c : cells) {
      if (c->bucket.kind != kinds[k]) {
        continue;
      }
      if (!first) {
        out += ',';
      }
      first = false;
      out += cell_to_json(*c);
    }
    out += ']';
  }
  out += '}';
}

} // namespace

GpsIngestSummary ingest_gps_file(Store const& store, fs::path const& input,
                                 Config const& config) {
  config.validate();
  TimeContext const tz{config.core.timezone};
  std::ifstream in(input, std::ios::binary);
  if (!in) {
    throw io_error("cannot open " + input.string());
  }
  auto result = ingest_gps(in, tz, config.core.max_reject_fraction);

  GpsIngestSummary summary;
  summary.data_rows = result.report.data_rows;
  summary.accepted = result.records.size();
  summary.rejections = std::move(result.report.rejections);
  summary.time_format = result.report.time_format;

  std::map<Partition, std::vector<GpsRecord>> parts;
  for (auto& r : result.records) {
    Partition p{tz.local_date(r.time), r.route};
    parts[p].push_back(std::move(r));
  }
  result.records.clear();
  result.records.shrink_to_fit();

  auto manifest = store.load_manifest();
  for (auto& [p, records] : parts) {
    auto const path = store.gps_path(p);
    if (fs::exists(path)) {
      auto existing = load_gps_partition(path, tz);
      records.insert(records.end(), std::make_move_iterator(existing.begin()),
                     std::make_move_iterator(existing.end()));
    }
    auto const body = gps_partition_body(records);
    write_file(path, body);
    auto& entry = partition_entry(manifest, p);
    entry["gps"] = {{"hash", fnv1a_hex(body)}, {"records", records.size()}};
    records.clear();
    records.shrink_to_fit();
  }
  summary.partitions = parts.size();

  if (!summary.rejections.empty()) {
    std::string body = "line,reason\n";
    for (auto const& r : summary.rejections) {
      text::append_int(body, static_cast<std::int64_t>(r.line));
      body += ",\"";
      for (auto const c : r.reason) {
        body += c;
        if (c == '"') {
          body += '"';
        }
      }
      body += "\"\n";
    }
    write_file(store.root() / "reports" / "gps_rejections.csv", body);
  }
  update_coverage(store, manifest);
  store.save_manifest(manifest);
  return summary;
}

Schedule ingest_schedule_file(Store const& store, fs::path const& input) {
  std::ifstream in(input, std::ios::binary);
  if (!in) {
    throw io_error("cannot open " + input.string());
  }
  auto schedule = ingest_schedule(in);
  std::ostringstream out;
  write_schedule_csv(out, schedule);
  auto const body = out.str();
  write_file(store.schedule_path(), body);

  auto manifest = store.load_manifest();
  json ids = json::array();
  for (auto const& [route, trips] : schedule.routes) {
    ids.push_back(route);
  }
  manifest["schedule"] = {{"hash", fnv1a_hex(body)},
                          {"routes", schedule.routes.size()},
                          {"trips", schedule.trip_count()},
                          {"stops", schedule.stops.size()},
                          {"stop_route_pairs", schedule.stop_route_pairs()},
                          {"route_ids", std::move(ids)}};
  update_coverage(store, manifest);
  store.save_manifest(manifest);
  return schedule;
}

PipelineReport run_preprocess(Store const& store, Config const& config,
                              PipelineOptions const& options) {
  return run_stages(store, config, options, true, false);
}

PipelineReport run_estimate(Store const& store, Config const& config,
                            PipelineOptions const& options) {
  return run_stages(store, config, options, false, true);
}

std::vector<Slot> collect_route_slots(Store const& store, Config const& config,
                                      Schedule const& schedule,
                                      std::string const& route,
                                      std::vector<Partition> const& partitions,
                                      json const& manifest) {
  TimeContext const tz{config.core.timezone};
  std::vector<ArrivalEstimate> estimates;
  for (auto const& p : partitions) {
    auto part = parse_estimates_jsonl(read_file(store.estimates_path(p)));
    estimates.insert(estimates.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
  }
  auto slots = build_slots(estimates, tz, config.metrics.include_all_candidates);
  estimates.clear();
  estimates.shrink_to_fit();

  auto const* trips = schedule.trips_for(route);
  if (trips == nullptr) {
    return slots;
  }
  RouteIndex const index{*trips};
  std::set<std::pair<ServiceDate, std::string_view>> served;
  for (auto const& s : slots) {
    served.emplace(s.service_date, s.trip);
  }
  std::vector<Slot> missed;
  for (auto const& p : partitions) {
    auto const& entry = manifest["partitions"][p.key()];
    auto const& stats = entry["preprocess"]["stats"];
    auto const fwd = stats.value("runs_forward", std::size_t{0});
    auto const rev = stats.value("runs_reverse", std::size_t{0});
    for (std::size_t i = 0; i < trips->size(); ++i) {
      auto const& trip = (*trips)[i];
      if (!index.service_days[i].runs_on(p.date) ||
          served.count({p.date, trip.trip})) {
        continue;
      }
      auto const& dir = index.directions[i];
      auto const active = !dir ? fwd + rev > 0
                               : (*dir == Direction::forward ? fwd : rev) > 0;
      if (!active) {
        continue;
      }
      for (auto const& st : trip.stop_times) {
        Slot s;
        s.service_date = p.date;
        s.route = route;
        s.stop_id = st.stop;
        s.trip = trip.trip;
        s.seq = st.seq;
        s.scheduled_time = st.arrival;
        s.scheduled = tz.resolve(p.date, st.arrival);
        s.hour = tz.local_time(s.scheduled).hour();
        s.missed = true;
        missed.push_back(std::move(s));
      }
    }
  }
  slots.insert(slots.end(), std::make_move_iterator(missed.begin()),
               std::make_move_iterator(missed.end()));
  return slots;
}

PipelineReport run_analyze(Store const& store, Config const& config,
                           PipelineOptions const& options) {
  config.validate();
  PipelineReport report;
  auto manifest = store.load_manifest();
  auto const schedule = store.load_schedule();
  auto const metrics_hash = config.metrics_hash();

  std::map<std::string, std::vector<Partition>> by_route;
  std::string input = metrics_hash + "|" + schedule_hash(manifest) + "|" +
                      options.range.to_string() + "|" +
                      options.route.value_or("*");
  std::optional<ServiceDate> first;
  std::optional<ServiceDate> last;
  for (auto const& p : store.gps_partitions()) {
    if (!options.range.contains(p.date) ||
        (options.route && *options.route != p.route)) {
      continue;
    }
    auto const& entry = manifest["partitions"][p.key()];
    if (!stage_complete(entry, "estimate")) {
      if (entry.contains("estimate") &&
          entry["estimate"].value("status", "") == "skipped") {
        continue;
      }
      report.failures.push_back(p.key() + ": not estimated");
      continue;
    }
    by_route[p.route].push_back(p);
    input += "|" + p.key() + "=" + entry["estimate"].value("output_hash", "");
    first = first ? std::min(*first, p.date) : p.date;
    last = last ? std::max(*last, p.date) : p.date;
  }
  auto const input_hash = fnv1a_hex(input);

  if (manifest.contains("analytics") &&
      manifest["analytics"].value("status", "") == "complete" &&
      manifest["analytics"].value("input_hash", "") == input_hash &&
      fs::exists(store.cells_path()) && fs::exists(store.summary_path())) {
    report.analytics_reused = true;
    report.cells = manifest["analytics"].value("cells", std::size_t{0});
    return report;
  }

  OnTimeWindow const window{config.metrics.early_s, config.metrics.late_s};
  fs::create_directories(store.analytics_dir());
  auto tmp = store.cells_path();
  tmp += ".tmp";
  std::ofstream cells_out(tmp, std::ios::binary | std::ios::trunc);
  if (!cells_out) {
    throw io_error("cannot write " + tmp.string());
  }

  // System cells are the bucket-wise sum of every route's system cells.
  std::map<Bucket, MetricCell> system;
  for (auto const& [route, parts] : by_route) {
    auto const slots =
        collect_route_slots(store, config, schedule, route, parts, manifest);
    std::vector<SlotOutcome> outcomes;
    outcomes.reserve(slots.size());
    for (auto const& s : slots) {
      outcomes.push_back(evaluate_slot(s, window));
    }
    auto const cells = compute_cells(outcomes);
    std::string body;
    for (auto const& c : cells) {
      if (c.scope.kind == ScopeKind::system) {
        auto& acc = system[c.bucket];
        acc.scope = c.scope;
        acc.bucket = c.bucket;
        acc.merge(c);
        continue;
      }
      body += cell_to_json(c);
      body += '\n';
      ++report.cells;
    }
    cells_out << body;
  }
  std::vector<MetricCell const*> system_cells;
  std::string tail;
  for (auto const& [bucket, c] : system) {
    system_cells.push_back(&c);
    tail += cell_to_json(c);
    tail += '\n';
    ++report.cells;
  }
  cells_out << tail;
  cells_out.close();
  if (!cells_out) {
    throw io_error("write failure on " + tmp.string());
  }
  fs::rename(tmp, store.cells_path());

  std::set<std::string> gps_routes;
  for (auto const& [route, parts] : by_route) {
    gps_routes.insert(route);
  }
  std::string summary = "{\"store_version\":";
  text::append_int(summary, kStoreVersion);
  summary += ",\"config_hash\":";
  text::append_json_string(summary, metrics_hash);
  summary += ",\"date_range\":{\"first\":";
  summary += first ? "\"" + format_date(*first) + "\"" : "null";
  summary += ",\"last\":";
  summary += last ? "\"" + format_date(*last) + "\"" : "null";
  summary += "},\"basic_information\":{\"routes\":";
  text::append_int(summary, static_cast<std::int64_t>(schedule.routes.size()));
  summary += ",\"routes_with_gps\":";
  text::append_int(summary, static_cast<std::int64_t>(gps_routes.size()));
  summary += ",\"stops\":";
  text::append_int(summary, static_cast<std::int64_t>(schedule.stops.size()));
  summary += ",\"stop_route_pairs\":";
  text::append_int(summary,
                   static_cast<std::int64_t>(schedule.stop_route_pairs()));
  summary += ",\"trips\":";
  text::append_int(summary, static_cast<std::int64_t>(schedule.trip_count()));
  summary += "},\"cells\":";
  append_cell_group(summary, system_cells);
  summary += "}\n";
  write_file(store.summary_path(), summary);

  nlohmann::ordered_json meta{{"store_version", kStoreVersion},
                              {"config_hash", metrics_hash},
                              {"input_hash", input_hash},
                              {"date_range", options.range.to_string()},
                              {"route", options.route
                                            ? nlohmann::ordered_json(*options.route)
                                            : nlohmann::ordered_json(nullptr)},
                              {"config", config.to_json()}};
  write_file(store.analytics_dir() / "_meta.json", meta.dump(2) + "\n");

  manifest["analytics"] = {{"status", "complete"},
                           {"config_hash", metrics_hash},
                           {"input_hash", input_hash},
                           {"date_range", options.range.to_string()},
                           {"cells", report.cells}};
  manifest["config"] = plain(config.to_json());
  store.save_manifest(manifest);
  report.analytics_computed = true;
  return report;
}

PipelineReport run_pipeline(Store const& store, Config const& config,
                            PipelineOptions const& options) {
  auto report = run_stages(store, config, options, true, true);
  auto const analytics = run_analyze(store, config, options);
  report.analytics_computed = analytics.analytics_computed;
  report.analytics_reused = analytics.analytics_reused;
  report.cells = analytics.cells;
  report.failures.insert(report.failures.end(), analytics.failures.begin(),
                         analytics.failures.end());
  return report;
}

} // namespace transit
