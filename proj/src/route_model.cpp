// SPDX-License-Identifier: Apache-2.0
#include "bte/route_model.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bte {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

LandUsePattern parse_lup(const std::string& token) {
  if (token == "CBD") return LandUsePattern::CBD;
  if (token == "IC") return LandUsePattern::IC;
  if (token == "ISU") return LandUsePattern::ISU;
  if (token == "OSU") return LandUsePattern::OSU;
  throw RouteConfigError("unknown LUP token: " + token);
}

const char* lup_name(LandUsePattern lup) {
  switch (lup) {
    case LandUsePattern::CBD: return "CBD";
    case LandUsePattern::IC: return "IC";
    case LandUsePattern::ISU: return "ISU";
    case LandUsePattern::OSU: return "OSU";
  }
  return "?";
}

const char* spatial_class_name(SpatialClass c) {
  return c == SpatialClass::SIS ? "SIS" : "NS";
}

double Route::total_length_m() const {
  double sum = 0.0;
  for (const auto& s : sections) sum += s.length_m;
  return sum;
}

const RouteSection& Route::section(int section_id) const {
  if (section_id < 1 || section_id > static_cast<int>(sections.size()))
    throw RouteConfigError("section id out of range: " +
                           std::to_string(section_id));
  return sections[section_id - 1];
}

std::vector<BusStop> Route::stops() const {
  std::vector<BusStop> out;
  if (sections.empty()) return out;
  out.push_back(sections.front().start_stop);
  for (const auto& s : sections) out.push_back(s.end_stop);
  return out;
}

namespace {

BusStop stop_from_json(const json& j) {
  BusStop s;
  s.stop_id = j.at("stop_id").get<int>();
  s.name = j.at("name").get<std::string>();
  s.latitude = j.at("latitude").get<double>();
  s.longitude = j.at("longitude").get<double>();
  if (s.latitude < -90 || s.latitude > 90)
    throw RouteConfigError("latitude out of range for stop " + s.name);
  if (s.longitude < -180 || s.longitude > 180)
    throw RouteConfigError("longitude out of range for stop " + s.name);
  return s;
}

json stop_to_json(const BusStop& s) {
  return json{{"stop_id", s.stop_id},
              {"name", s.name},
              {"latitude", s.latitude},
              {"longitude", s.longitude}};
}

void validate(const Route& route) {
  int expected_id = 1;
  const BusStop* prev_end = nullptr;
  for (const auto& s : route.sections) {
    if (s.section_id != expected_id)
      throw RouteConfigError("non-contiguous section ids (expected " +
                             std::to_string(expected_id) + ", got " +
                             std::to_string(s.section_id) + ")");
    if (s.length_m <= 0)
      throw RouteConfigError("section " + std::to_string(s.section_id) +
                             ": length must be > 0");
    if (s.intersection_delay_s < 0 || s.dwell_time_s < 0)
      throw RouteConfigError("section " + std::to_string(s.section_id) +
                             ": negative delay or dwell");
    if (s.intersection_delay_s > 0 && !s.has_signalized_intersection)
      throw RouteConfigError("section " + std::to_string(s.section_id) +
                             ": intersection delay on non-intersection "
                             "section");
    if (prev_end && prev_end->stop_id != s.start_stop.stop_id)
      throw RouteConfigError("section " + std::to_string(s.section_id) +
                             ": start stop does not chain from previous "
                             "section");
    prev_end = &s.end_stop;
    ++expected_id;
  }
}

}  // namespace

Route load_route(const std::string& config_text) {
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::exception& e) {
    throw RouteConfigError(std::string("malformed route config: ") + e.what());
  }
  try {
    int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion)
      throw RouteConfigError("unsupported route config format_version " +
                             std::to_string(version));
    Route route;
    route.route_id = doc.at("route_id").get<std::string>();
    for (const auto& js : doc.at("sections")) {
      RouteSection s;
      s.section_id = js.at("section_id").get<int>();
      s.start_stop = stop_from_json(js.at("start_stop"));
      s.end_stop = stop_from_json(js.at("end_stop"));
      s.length_m = js.at("length_m").get<double>();
      s.lup = parse_lup(js.at("lup").get<std::string>());
      s.has_signalized_intersection =
          js.at("signalized_intersection").get<bool>();
      s.intersection_delay_s = js.value("intersection_delay_s", 0.0);
      s.dwell_time_s = js.value("dwell_time_s", 0.0);
      route.sections.push_back(std::move(s));
    }
    validate(route);
    return route;
  } catch (const json::exception& e) {
    throw RouteConfigError(std::string("malformed route config: ") + e.what());
  }
}

std::string serialize_route(const Route& route) {
  json sections = json::array();
  for (const auto& s : route.sections) {
    sections.push_back(
        json{{"section_id", s.section_id},
             {"start_stop", stop_to_json(s.start_stop)},
             {"end_stop", stop_to_json(s.end_stop)},
             {"length_m", s.length_m},
             {"lup", lup_name(s.lup)},
             {"signalized_intersection", s.has_signalized_intersection},
             {"intersection_delay_s", s.intersection_delay_s},
             {"dwell_time_s", s.dwell_time_s}});
  }
  json doc{{"format_version", kFormatVersion},
           {"route_id", route.route_id},
           {"sections", sections}};
  return doc.dump(2) + "\n";
}

Route load_route_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RouteConfigError("cannot open route config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_route(ss.str());
}

}  // namespace bte
