#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "transit/ingest.hpp"

using namespace transit;
using transit::testing::Gen;

namespace {

TimeContext const tz{"America/Los_Angeles"};

GpsIngestResult gps(std::string const& body, double max_reject = 1.0) {
  std::istringstream in(body);
  return ingest_gps(in, tz, max_reject);
}

Schedule schedule(std::string const& body) {
  std::istringstream in(body);
  return ingest_schedule(in);
}

std::string canonical(Schedule const& s) {
  std::ostringstream out;
  write_schedule_csv(out, s);
  return out.str();
}

std::string const sched_header =
    "route_id,trip_id,stop_sequence,stop_name,arrival_time,lat,lon\n";

} // namespace

TEST(ingest_gps, maps_fields_directly) {
  auto const r = gps("route_id,bus_id,run_id,time,lat,lon\n"
                     "2,6341,7,1512345678,34.05,-118.25\n");
  ASSERT_EQ(r.records.size(), 1U);
  auto const& rec = r.records[0];
  EXPECT_EQ(rec.route, "2");
  EXPECT_EQ(rec.bus_id, "6341");
  EXPECT_EQ(rec.run_id, "7");
  EXPECT_EQ(rec.time, 1512345678);
  EXPECT_EQ(rec.pos, (GeoPoint{34.05, -118.25}));
  EXPECT_EQ(rec.identifier(), (Identifier{"6341", "7"}));
  EXPECT_TRUE(r.report.rejections.empty());
}

TEST(ingest_gps, rejects_latitude_out_of_range) {
  auto const r = gps("route_id,bus_id,run_id,time,lat,lon\n"
                     "2,6341,7,1512345678,95.0,-118.25\n");
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(r.report.rejections.size(), 1U);
  EXPECT_EQ(r.report.rejections[0].reason, "lat out of range");
  EXPECT_EQ(r.report.rejections[0].line, 2U);
}

TEST(ingest_gps, counts_valid_and_invalid_rows) {
  // 4 valid rows, 3 invalid ones (bad time, empty bus, too few fields).
  auto const r = gps("route_id,bus_id,run_id,time,lat,lon\n"
                     "2,1,1,1512345678,34.05,-118.25\n"
                     "2,1,1,abc,34.05,-118.25\n"
                     "2,1,1,1512345738,34.06,-118.25\n"
                     "2,,1,1512345798,34.07,-118.25\n"
                     "3,9,4,1512345800,34.00,-118.00\n"
                     "3,9,4,1512345900\n"
                     "3,9,4,1512346000,34.01,-118.00\n");
  EXPECT_EQ(r.records.size(), 4U);
  EXPECT_EQ(r.report.rejections.size(), 3U);
  EXPECT_EQ(r.report.data_rows, 7U);
  EXPECT_EQ(r.report.rejections[0].line, 3U);
  EXPECT_EQ(r.report.rejections[1].line, 5U);
  EXPECT_EQ(r.report.rejections[2].line, 7U);
}

TEST(ingest_gps, header_columns_may_be_reordered) {
  auto const r = gps("time,lat,lon,route_id,bus_id,run_id\n"
                     "1512345678,34.05,-118.25,2,6341,7\n");
  ASSERT_EQ(r.records.size(), 1U);
  EXPECT_EQ(r.records[0].bus_id, "6341");
}

TEST(ingest_gps, missing_header_column_is_fatal) {
  EXPECT_THROW(gps("route_id,bus_id,time,lat,lon\n2,1,1,34,-118\n"), format_error);
  EXPECT_THROW(gps(""), format_error);
}

TEST(ingest_gps, local_datetime_times_are_detected) {
  auto const r = gps("route_id,bus_id,run_id,time,lat,lon\n"
                     "2,1,1,2017-12-04 08:00:00,34.05,-118.25\n");
  ASSERT_EQ(r.records.size(), 1U);
  EXPECT_EQ(r.report.time_format, TimeFormat::local_datetime);
  EXPECT_EQ(r.records[0].time, 1512403200);
}

TEST(ingest_gps, aborts_above_reject_threshold) {
  std::string body = "route_id,bus_id,run_id,time,lat,lon\n";
  for (int i = 0; i < 8; ++i) {
    body += "2,1,1,1512345678,34.05,-118.25\n";
  }
  body += "2,1,1,x,34.05,-118.25\n";
  EXPECT_NO_THROW(gps(body, 0.2));
  body += "2,1,1,x,34.05,-118.25\n";
  body += "2,1,1,x,34.05,-118.25\n";
  EXPECT_THROW(gps(body, 0.2), format_error);
}

TEST(ingest_gps_property, records_plus_rejections_equal_data_rows) {
  Gen gen{11};
  for (int trial = 0; trial < 500; ++trial) {
    std::string body = "route_id,bus_id,run_id,time,lat,lon\n";
    auto const n = gen.integer(0, 40);
    std::size_t expected_bad = 0;
    for (int i = 0; i < n; ++i) {
      switch (gen.integer(0, 6)) {
      case 0: body += "2,1,1,zz,34.0,-118.0\n"; ++expected_bad; break;
      case 1: body += "2,1,1,1512345678,91.0,-118.0\n"; ++expected_bad; break;
      case 2: body += "2,1,1,1512345678,34.0\n"; ++expected_bad; break;
      case 3: body += "2,1,,1512345678,34.0,-118.0\n"; ++expected_bad; break;
      default:
        body += "2,1,1," + std::to_string(gen.integer(1'500'000'000, 1'600'000'000)) +
                ",34.0,-118.0\n";
      }
    }
    auto const r = gps(body);
    ASSERT_EQ(r.records.size() + r.report.rejections.size(), r.report.data_rows);
    ASSERT_EQ(r.report.data_rows, static_cast<std::size_t>(n));
    ASSERT_EQ(r.report.rejections.size(), expected_bad);
  }
}

TEST(ingest_schedule, groups_rows_of_one_trip) {
  auto const s = schedule(sched_header +
                          "2,T1,2,B,08:05:00,34.01,-118.0\n"
                          "2,T1,1,A,08:00:00,34.00,-118.0\n"
                          "2,T1,3,C,08:10:00,34.02,-118.0\n");
  ASSERT_EQ(s.routes.size(), 1U);
  auto const& trips = s.routes.at("2");
  ASSERT_EQ(trips.size(), 1U);
  ASSERT_EQ(trips[0].stop_times.size(), 3U);
  EXPECT_EQ(trips[0].stop_times[0].seq, 1);
  EXPECT_EQ(trips[0].stop_times[2].seq, 3);
  EXPECT_EQ(trips[0].service, "ALL");
  // Without a stop_id column the stop name identifies the stop.
  EXPECT_EQ(trips[0].stop_times[1].stop, "B");
}

TEST(ingest_schedule, duplicate_sequence_is_fatal) {
  try {
    schedule(sched_header + "2,T1,1,A,08:00:00,34.0,-118.0\n"
                            "2,T1,1,B,08:05:00,34.1,-118.0\n");
    FAIL() << "expected validation_error";
  } catch (validation_error const& e) {
    EXPECT_NE(std::string{e.what()}.find("T1"), std::string::npos);
  }
}

TEST(ingest_schedule, decreasing_arrivals_are_fatal) {
  EXPECT_THROW(schedule(sched_header + "2,T1,1,A,08:05:00,34.0,-118.0\n"
                                       "2,T1,2,B,08:00:00,34.1,-118.0\n"),
               validation_error);
}

TEST(ingest_schedule, two_routes_two_trips_five_stops) {
  std::string body = sched_header;
  for (auto const* route : {"2", "4"}) {
    for (int trip = 0; trip < 2; ++trip) {
      for (int seq = 1; seq <= 5; ++seq) {
        body += std::string{route} + "," + route + "-" + std::to_string(trip) +
                "," + std::to_string(seq) + ",S" + std::to_string(seq) + ",08:0" +
                std::to_string(seq) + ":00,34.0" + std::to_string(seq) + ",-118.0\n";
      }
    }
  }
  auto const s = schedule(body);
  ASSERT_EQ(s.routes.size(), 2U);
  EXPECT_EQ(s.routes.at("2").size(), 2U);
  EXPECT_EQ(s.routes.at("4").size(), 2U);
  EXPECT_EQ(s.trip_count(), 4U);
  EXPECT_EQ(s.stops.size(), 5U);
  EXPECT_EQ(s.stop_route_pairs(), 10U);
  EXPECT_EQ(s.trips_for("3"), nullptr);
}

TEST(ingest_schedule, service_and_stop_id_columns) {
  auto const s = schedule(
      "route_id,trip_id,stop_sequence,stop_name,arrival_time,lat,lon,service_id,stop_id\n"
      "2,T1,1,Main,24:30:00,34.0,-118.0,DEC17-Weekday-01,4756\n");
  auto const& t = s.routes.at("2")[0];
  EXPECT_EQ(t.service, "DEC17-Weekday-01");
  EXPECT_EQ(t.stop_times[0].stop, "4756");
  EXPECT_EQ(t.stop_times[0].arrival.seconds, 24 * 3600 + 1800);
  EXPECT_EQ(s.stops.at("4756").name, "Main");
}

TEST(ingest_schedule_property, canonical_output_ignores_row_order) {
  Gen gen{12};
  std::vector<std::string> rows;
  for (int route = 0; route < 3; ++route) {
    for (int trip = 0; trip < 4; ++trip) {
      for (int seq = 1; seq <= 6; ++seq) {
        rows.push_back(std::to_string(route) + ",R" + std::to_string(route) + "T" +
                       std::to_string(trip) + "," + std::to_string(seq) + ",S" +
                       std::to_string(route * 10 + seq) + ",0" + std::to_string(seq) +
                       ":00:00,34." + std::to_string(route * 10 + seq) + ",-118.0\n");
      }
    }
  }
  auto join = [&] {
    std::string body = sched_header;
    for (auto const& r : rows) {
      body += r;
    }
    return body;
  };
  auto const reference = canonical(schedule(join()));
  for (int trial = 0; trial < 50; ++trial) {
    for (std::size_t i = rows.size() - 1; i > 0; --i) {
      std::swap(rows[i], rows[static_cast<std::size_t>(gen.integer(0, static_cast<std::int64_t>(i)))]);
    }
    ASSERT_EQ(canonical(schedule(join())), reference);
  }
  // The canonical form reads back to itself.
  EXPECT_EQ(canonical(schedule(reference)), reference);
}

TEST(service_days, recognized_ids) {
  auto const monday = parse_date("2017-12-04");
  auto const saturday = parse_date("2017-12-09");
  auto const sunday = parse_date("2017-12-10");
  auto const weekday = ServiceDays::parse("DEC17-Weekday-01");
  EXPECT_TRUE(weekday.runs_on(monday));
  EXPECT_FALSE(weekday.runs_on(saturday));
  EXPECT_EQ(weekday.describe(), "Weekday");
  EXPECT_TRUE(ServiceDays::parse("saturday").runs_on(saturday));
  EXPECT_FALSE(ServiceDays::parse("SATURDAY").runs_on(sunday));
  EXPECT_TRUE(ServiceDays::parse("Weekend").runs_on(sunday));
  EXPECT_TRUE(ServiceDays::parse("ALL").runs_on(sunday));
  EXPECT_EQ(ServiceDays::parse("1010000").describe(), "Mon,Wed");
  EXPECT_EQ(ServiceDays::parse("anything").mask(), 0x7f);
}
