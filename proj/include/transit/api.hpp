#pragma once

#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "transit/ingest.hpp"
#include "transit/store.hpp"

namespace transit {

struct ApiResponse {
  int status = 200;
  std::string body;
};

/// Read-only view over a store's analytics. Everything is loaded once at
/// construction; responses embed stored cell objects verbatim.
class ApiService {
public:
  explicit ApiService(Store store);

  ApiResponse handle(std::string_view path) const;
  bool analytics_available() const { return available_; }

private:
  struct CellLine {
    std::string bucket;
    std::string json;
  };
  using CellList = std::vector<CellLine>;

  ApiResponse overview() const;
  ApiResponse routes() const;
  ApiResponse route(std::string const& r) const;
  ApiResponse stop(std::string const& r, std::string const& s) const;
  ApiResponse trip(std::string const& r, std::string const& s,
                   std::string const& t) const;
  ApiResponse unavailable() const;

  Store store_;
  bool available_ = false;
  std::string unavailable_reason_;
  std::string summary_;
  Schedule schedule_;
  std::map<std::string, CellList> route_cells_;
  std::map<std::pair<std::string, std::string>, CellList> stop_cells_;
  std::map<std::tuple<std::string, std::string, std::string>, CellList> trip_cells_;
  std::string stage_status_;
};

ApiResponse api_error(int status, std::string_view code, std::string_view message);

/// Blocking HTTP server on host:port.
void serve(Store const& store, std::string const& host, int port);

} // namespace transit
