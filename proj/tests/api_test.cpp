#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "fixture.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support.hpp"
#include "transit/api.hpp"

using namespace transit;
using transit::testing::TempDir;
using transit::testing::ingest_scenario;
using nlohmann::json;

namespace {

synth::Scenario small() {
  synth::Scenario sc;
  sc.n_routes = 2;
  sc.trips_per_day = 10;
  sc.days = 2;
  sc.delay_sd_s = 120;
  return sc;
}

class api : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir{"api"};
    ingest_scenario(dir_->path(), small());
    run_pipeline(Store{dir_->path() / "store"}, Config{});
    service_ = new ApiService{Store{dir_->path() / "store"}};
  }

  static void TearDownTestSuite() {
    delete service_;
    delete dir_;
  }

  static json get(std::string const& path, int expected_status = 200) {
    auto const r = service_->handle(path);
    EXPECT_EQ(r.status, expected_status) << path;
    return json::parse(r.body);
  }

  static inline TempDir* dir_ = nullptr;
  static inline ApiService* service_ = nullptr;
};

int free_port() {
  auto const fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

} // namespace

TEST_F(api, overview_is_the_stored_summary) {
  auto const r = service_->handle("/api/overview");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, read_file(dir_->path() / "store" / "analytics" / "summary.json"));
  auto const j = json::parse(r.body);
  EXPECT_EQ(j["basic_information"]["routes"], 2);
}

TEST_F(api, routes_list_headline_cells) {
  auto const j = get("/api/routes");
  ASSERT_EQ(j["routes"].size(), 2U);
  EXPECT_EQ(j["routes"][0]["route"], "2");
  EXPECT_EQ(j["routes"][0]["stops"], 20);
  EXPECT_EQ(j["routes"][0]["trips"], 10);
  EXPECT_EQ(j["routes"][0]["headline"]["bucket"], "all");
  EXPECT_EQ(j["routes"][0]["headline"]["scope"], "route");
}

TEST_F(api, route_detail_groups_cells_and_orders_stops) {
  auto const j = get("/api/routes/2");
  EXPECT_EQ(j["route"], "2");
  for (auto const* kind : {"all", "hour_of_day", "day_of_week", "month"}) {
    ASSERT_TRUE(j["cells"].contains(kind)) << kind;
    for (auto const& c : j["cells"][kind]) {
      EXPECT_EQ(c["bucket"], kind);
    }
  }
  EXPECT_EQ(j["cells"]["all"].size(), 1U);
  EXPECT_EQ(j["cells"]["day_of_week"].size(), 2U);
  ASSERT_EQ(j["stops"].size(), 20U);
  for (auto const& s : j["stops"]) {
    EXPECT_TRUE(s.contains("lat") && s.contains("lon") && s.contains("name"));
  }
}

TEST_F(api, stop_detail_lists_trips_with_service_days) {
  auto const j = get("/api/routes/2/stops/4760");
  EXPECT_EQ(j["stop"]["stop_id"], "4760");
  ASSERT_EQ(j["cells"]["all"].size(), 1U);
  EXPECT_EQ(j["cells"]["all"][0]["stop"], "4760");
  ASSERT_EQ(j["trips"].size(), 10U);
  std::string previous;
  for (auto const& t : j["trips"]) {
    EXPECT_EQ(t["service_days"], "Daily");
    EXPECT_EQ(t["service_id"], "ALL");
    auto const time = t["scheduled_time"].get<std::string>();
    EXPECT_LE(previous, time);
    previous = time;
  }
}

TEST_F(api, trip_detail_carries_its_cells) {
  auto const stop = get("/api/routes/2/stops/4760");
  auto const trip = stop["trips"][0]["trip"].get<std::string>();
  auto const j = get("/api/routes/2/stops/4760/trips/" + trip);
  EXPECT_EQ(j["trip"], trip);
  EXPECT_EQ(j["service_days"], "Daily");
  ASSERT_EQ(j["cells"]["all"].size(), 1U);
  EXPECT_EQ(j["cells"]["all"][0]["trip"], trip);
  EXPECT_EQ(j["cells"]["all"][0]["n_scheduled"], 2);
}

TEST_F(api, unknown_entities_are_404_with_codes) {
  EXPECT_EQ(get("/api/routes/NOPE", 404)["error"]["code"], "unknown_route");
  EXPECT_EQ(get("/api/routes/NOPE/stops/4760", 404)["error"]["code"], "unknown_route");
  EXPECT_EQ(get("/api/routes/2/stops/4856", 404)["error"]["code"], "unknown_stop");
  EXPECT_EQ(get("/api/routes/2/stops/4760/trips/none", 404)["error"]["code"],
            "unknown_trip");
  EXPECT_EQ(get("/api/elsewhere", 404)["error"]["code"], "not_found");
  EXPECT_EQ(get("/index.html", 404)["error"]["code"], "not_found");
}

TEST_F(api, query_strings_are_ignored) {
  EXPECT_EQ(service_->handle("/api/overview?x=1").body,
            service_->handle("/api/overview").body);
}

TEST(api_unavailable, missing_analytics_is_503) {
  TempDir const dir{"api"};
  ingest_scenario(dir.path(), small());
  Store const store{dir.path() / "store"};
  run_preprocess(store, Config{});
  ApiService const service{store};
  EXPECT_FALSE(service.analytics_available());
  auto const r = service.handle("/api/routes");
  EXPECT_EQ(r.status, 503);
  auto const j = json::parse(r.body);
  EXPECT_EQ(j["error"]["code"], "analytics_unavailable");
  EXPECT_EQ(j["error"]["stages"]["partitions"], 4);
  EXPECT_EQ(j["error"]["stages"]["preprocess_complete"], 4);
  EXPECT_EQ(j["error"]["stages"]["estimate_complete"], 0);
  EXPECT_EQ(j["error"]["stages"]["analytics"], "missing");
}

TEST(api_unavailable, empty_store_is_503) {
  TempDir const dir{"api"};
  ApiService const service{Store{dir.path()}};
  EXPECT_EQ(service.handle("/api/overview").status, 503);
}

TEST_F(api, http_server_serves_the_same_bytes) {
  auto const port = free_port();
  Store const store{dir_->path() / "store"};
  std::thread{[store, port] { serve(store, "127.0.0.1", port); }}.detach();
  httplib::Client client{"127.0.0.1", port};
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    res = client.Get("/api/routes/2");
    if (!res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(res->body, service_->handle("/api/routes/2").body);
  auto const missing = client.Get("/api/routes/NOPE");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
}
