// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bte {

enum class LandUsePattern { CBD = 0, IC = 1, ISU = 2, OSU = 3 };
enum class SpatialClass { NS, SIS };

LandUsePattern parse_lup(const std::string& token);  // closed set, else throws
const char* lup_name(LandUsePattern lup);
inline int lup_code(LandUsePattern lup) { return static_cast<int>(lup); }

const char* spatial_class_name(SpatialClass c);

struct BusStop {
  int stop_id = 0;
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct RouteSection {
  int section_id = 0;  // 1-based, contiguous along the route
  BusStop start_stop;
  BusStop end_stop;
  double length_m = 0.0;
  LandUsePattern lup = LandUsePattern::CBD;
  bool has_signalized_intersection = false;
  double intersection_delay_s = 0.0;  // average signal delay, config constant
  double dwell_time_s = 0.0;          // standard dwell, config constant
};

struct Route {
  std::string route_id;
  std::vector<RouteSection> sections;

  double total_length_m() const;
  const RouteSection& section(int section_id) const;
  // Ordered stops: start of section 1 followed by each section's end stop.
  std::vector<BusStop> stops() const;
};

class RouteConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline SpatialClass spatial_class(const RouteSection& s) {
  return s.has_signalized_intersection ? SpatialClass::SIS : SpatialClass::NS;
}

// Route config document (JSON, format_version 1); see docs/formats.md.
Route load_route(const std::string& config_text);
std::string serialize_route(const Route& route);
Route load_route_file(const std::string& path);

}  // namespace bte
