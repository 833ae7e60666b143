// SPDX-License-Identifier: Apache-2.0
#include "bte/avl_ingest.hpp"

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "bte/csvutil.hpp"
#include "bte/geo.hpp"

namespace bte {

namespace {

const char* kAvlHeader[6] = {"Vehicle No", "Date and Time", "Latitude",
                             "Longitude",  "Odometer",      "Speed"};

}  // namespace

AvlParseResult parse_avl_csv(std::istream& stream) {
  AvlParseResult result;
  std::string line;
  if (!std::getline(stream, line)) return result;  // empty stream

  auto header = split_csv_line(line);
  if (header.size() != 6)
    throw IngestError("header mismatch: expected 6 columns");
  for (int i = 0; i < 6; ++i)
    if (header[i] != kAvlHeader[i])
      throw IngestError("header mismatch: column " + std::to_string(i + 1) +
                        " is \"" + header[i] + "\", expected \"" +
                        kAvlHeader[i] + "\"");

  size_t row = 1;
  while (std::getline(stream, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    auto reject = [&](const std::string& reason, const std::string& vid) {
      result.rejected.push_back({vid, row, reason});
    };
    if (fields.size() != 6) {
      reject("wrong field count", fields.empty() ? "" : fields[0]);
      continue;
    }
    AvlPoint p;
    p.vehicle_id = fields[0];
    try {
      p.timestamp = parse_avl_datetime(fields[1]);
    } catch (const std::invalid_argument&) {
      reject("bad datetime", p.vehicle_id);
      continue;
    }
    try {
      p.latitude = parse_double(fields[2]);
    } catch (const std::invalid_argument&) {
      reject("non-numeric latitude", p.vehicle_id);
      continue;
    }
    try {
      p.longitude = parse_double(fields[3]);
    } catch (const std::invalid_argument&) {
      reject("non-numeric longitude", p.vehicle_id);
      continue;
    }
    try {
      p.odometer_km = parse_double(fields[4]);
    } catch (const std::invalid_argument&) {
      reject("non-numeric odometer", p.vehicle_id);
      continue;
    }
    try {
      p.speed_kmh = parse_double(fields[5]);
    } catch (const std::invalid_argument&) {
      reject("non-numeric speed", p.vehicle_id);
      continue;
    }
    if (p.latitude < -90 || p.latitude > 90) {
      reject("latitude out of range", p.vehicle_id);
      continue;
    }
    if (p.longitude < -180 || p.longitude > 180) {
      reject("longitude out of range", p.vehicle_id);
      continue;
    }
    if (p.odometer_km < 0) {
      reject("negative odometer", p.vehicle_id);
      continue;
    }
    if (p.speed_kmh < 0) {
      reject("negative speed", p.vehicle_id);
      continue;
    }
    result.points.push_back(std::move(p));
  }
  return result;
}

namespace {

struct BoundingBox {
  double lat_min, lat_max, lon_min, lon_max;
  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min &&
           lon <= lon_max;
  }
};

BoundingBox padded_bbox(const Route& route, double pad_m) {
  BoundingBox b{90, -90, 180, -180};
  for (const auto& stop : route.stops()) {
    b.lat_min = std::min(b.lat_min, stop.latitude);
    b.lat_max = std::max(b.lat_max, stop.latitude);
    b.lon_min = std::min(b.lon_min, stop.longitude);
    b.lon_max = std::max(b.lon_max, stop.longitude);
  }
  double lat_mid = 0.5 * (b.lat_min + b.lat_max);
  double dlat = pad_m / 111320.0;
  double dlon = pad_m / (111320.0 * std::cos(lat_mid * M_PI / 180.0));
  b.lat_min -= dlat;
  b.lat_max += dlat;
  b.lon_min -= dlon;
  b.lon_max += dlon;
  return b;
}

}  // namespace

std::vector<AvlPoint> clean(std::vector<AvlPoint> points, const Route& route,
                            const IngestConfig& config, CleanStats* stats) {
  CleanStats local;
  local.input = points.size();
  BoundingBox bbox = padded_bbox(route, config.bbox_pad_m);

  // Group per vehicle, preserving each vehicle's original order.
  std::map<std::string, std::vector<AvlPoint>> by_vehicle;
  for (auto& p : points) by_vehicle[p.vehicle_id].push_back(std::move(p));

  std::vector<AvlPoint> out;
  out.reserve(points.size());
  for (auto& [vid, stream] : by_vehicle) {
    bool have_prev = false;
    Timestamp prev_time = 0;
    double prev_odo = 0;
    for (auto& p : stream) {
      if (p.speed_kmh > config.max_speed_kmh) {
        ++local.dropped_speed;
        continue;
      }
      if (!bbox.contains(p.latitude, p.longitude)) {
        ++local.dropped_out_of_bbox;
        continue;
      }
      if (have_prev) {
        if (p.timestamp == prev_time) {
          ++local.dropped_duplicate_time;
          continue;
        }
        if (p.timestamp < prev_time || p.odometer_km < prev_odo) {
          ++local.dropped_non_monotonic;
          continue;
        }
      }
      have_prev = true;
      prev_time = p.timestamp;
      prev_odo = p.odometer_km;
      out.push_back(std::move(p));
    }
  }
  local.kept = out.size();
  if (stats) *stats = local;
  return out;
}

namespace {

struct StopVisit {
  int stop_index;      // 0-based along route.stops()
  size_t first_point;  // index into the chunk
  size_t last_point;
};

// Parameter s in [0, 1] of the closest approach of the chord p0 -> p1 to the
// stop, if that approach comes within the geofence radius; local planar
// projection centred on the stop. Sample spacing can exceed the geofence
// diameter, so a pass between two outside samples must still be caught.
std::optional<double> chord_passage(const AvlPoint& p0, const AvlPoint& p1,
                                    const BusStop& stop, double radius_m) {
  const double m_per_deg_lat = 111320.0;
  const double m_per_deg_lon =
      m_per_deg_lat * std::cos(stop.latitude * M_PI / 180.0);
  double x0 = (p0.longitude - stop.longitude) * m_per_deg_lon;
  double y0 = (p0.latitude - stop.latitude) * m_per_deg_lat;
  double dx = (p1.longitude - p0.longitude) * m_per_deg_lon;
  double dy = (p1.latitude - p0.latitude) * m_per_deg_lat;

  double a = dx * dx + dy * dy;
  double s = a == 0 ? 0.0 : std::clamp(-(x0 * dx + y0 * dy) / a, 0.0, 1.0);
  double mx = x0 + s * dx, my = y0 + s * dy;
  if (mx * mx + my * my > radius_m * radius_m) return std::nullopt;
  return s;
}

// Maximal runs of points lying inside one stop geofence, plus single-point
// visits where the chord between consecutive samples cut through a geofence
// without either sample landing inside.
std::vector<StopVisit> find_stop_visits(std::span<const AvlPoint> chunk,
                                        const std::vector<BusStop>& stops,
                                        const IngestConfig& config) {
  const double radius_m = config.geofence_radius_m;
  std::vector<StopVisit> visits;
  int current = -1;
  for (size_t i = 0; i < chunk.size(); ++i) {
    int assigned = -1;
    double best = radius_m;
    for (size_t s = 0; s < stops.size(); ++s) {
      double d = haversine_m(chunk[i].latitude, chunk[i].longitude,
                             stops[s].latitude, stops[s].longitude);
      if (d <= best) {
        best = d;
        assigned = static_cast<int>(s);
      }
    }
    if (assigned == -1 && i > 0 &&
        chunk[i].timestamp - chunk[i - 1].timestamp <=
            config.max_interp_gap_s) {
      int through = -1;
      double earliest = 2.0;
      for (size_t s = 0; s < stops.size(); ++s) {
        if (static_cast<int>(s) == current) continue;
        auto e = chord_passage(chunk[i - 1], chunk[i], stops[s], radius_m);
        if (e && *e < earliest) {
          earliest = *e;
          through = static_cast<int>(s);
        }
      }
      if (through >= 0) {
        visits.push_back({through, i, i});
        current = -1;
        continue;
      }
    }
    if (assigned != current) {
      if (assigned >= 0)
        visits.push_back({assigned, i, i});
      current = assigned;
    } else if (assigned >= 0) {
      visits.back().last_point = i;
    }
  }
  return visits;
}

}  // namespace

std::vector<TripTrace> segment_trips(const std::vector<AvlPoint>& points,
                                     const Route& route,
                                     const IngestConfig& config,
                                     std::vector<RowDiagnostic>* diagnostics) {
  std::vector<TripTrace> trips;
  const std::vector<BusStop> stops = route.stops();
  if (stops.size() < 2) return trips;
  const int origin = 0;
  const int terminus = static_cast<int>(stops.size()) - 1;

  std::map<std::string, std::vector<AvlPoint>> by_vehicle;
  for (const auto& p : points) by_vehicle[p.vehicle_id].push_back(p);

  for (auto& [vid, stream] : by_vehicle) {
    // Chunk at large sampling gaps; a trip never spans a gap.
    std::vector<std::pair<size_t, size_t>> chunks;
    size_t start = 0;
    for (size_t i = 1; i <= stream.size(); ++i) {
      if (i == stream.size() ||
          stream[i].timestamp - stream[i - 1].timestamp > config.max_gap_s) {
        chunks.emplace_back(start, i);
        start = i;
      }
    }

    int seq = 0;
    size_t assigned_points = 0;
    for (auto [lo, hi] : chunks) {
      std::span<const AvlPoint> chunk(stream.data() + lo, hi - lo);
      auto visits = find_stop_visits(chunk, stops, config);

      // Track an open up-candidate (started at origin) and down-candidate
      // (started at terminus) simultaneously.
      std::optional<StopVisit> up_start, down_start;
      for (const auto& v : visits) {
        if (v.stop_index == terminus && up_start) {
          TripTrace t;
          t.vehicle_id = vid;
          t.direction = TripDirection::Up;
          t.points.assign(chunk.begin() + up_start->first_point,
                          chunk.begin() + v.last_point + 1);
          t.trip_id = vid + "#" + std::to_string(++seq);
          assigned_points += t.points.size();
          trips.push_back(std::move(t));
          up_start.reset();
        }
        if (v.stop_index == origin && down_start) {
          TripTrace t;
          t.vehicle_id = vid;
          t.direction = TripDirection::Down;
          t.points.assign(chunk.begin() + down_start->first_point,
                          chunk.begin() + v.last_point + 1);
          t.trip_id = vid + "#" + std::to_string(++seq);
          assigned_points += t.points.size();
          trips.push_back(std::move(t));
          down_start.reset();
        }
        // A fresh origin/terminus visit (re)opens a candidate, so a partial
        // approach followed by a return to the origin restarts the trip.
        if (v.stop_index == origin) up_start = v;
        if (v.stop_index == terminus) down_start = v;
      }
    }
    if (diagnostics && assigned_points < stream.size())
      diagnostics->push_back(
          {vid, 0,
           std::to_string(stream.size() - assigned_points) +
               " points not assigned to any trip"});
  }
  return trips;
}

double infer_dwell(std::span<const AvlPoint> sub_trace,
                   double dwell_speed_kmh) {
  double total = 0.0;
  size_t i = 0;
  while (i < sub_trace.size()) {
    if (sub_trace[i].speed_kmh < dwell_speed_kmh) {
      size_t j = i;
      while (j + 1 < sub_trace.size() &&
             sub_trace[j + 1].speed_kmh < dwell_speed_kmh)
        ++j;
      total += sub_trace[j].timestamp - sub_trace[i].timestamp;
      i = j + 1;
    } else {
      ++i;
    }
  }
  return total;
}

namespace {

struct StopArrival {
  bool present = false;
  Timestamp time = 0;       // interpolated geofence entry, ms-quantized
  size_t point_index = 0;   // first point inside the geofence
};

// Arrival per stop in travel order; the scan cursor only moves forward so a
// revisit of an earlier stop cannot shadow a later one.
std::vector<StopArrival> stop_arrivals(const TripTrace& trace,
                                       const std::vector<BusStop>& stops,
                                       const std::vector<int>& order,
                                       const IngestConfig& config) {
  const double radius_m = config.geofence_radius_m;
  std::vector<StopArrival> arrivals(order.size());
  const auto& pts = trace.points;
  size_t cursor = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    const BusStop& stop = stops[order[k]];
    for (size_t i = cursor; i < pts.size(); ++i) {
      double d = haversine_m(pts[i].latitude, pts[i].longitude, stop.latitude,
                             stop.longitude);
      std::optional<Timestamp> entry;
      double dt = i > cursor ? pts[i].timestamp - pts[i - 1].timestamp : 0.0;
      if (i > cursor && dt <= config.max_interp_gap_s) {
        // Crossing interpolated along the chord, whether or not a sample
        // landed inside the geofence.
        if (auto s = chord_passage(pts[i - 1], pts[i], stop, radius_m))
          entry = pts[i - 1].timestamp + *s * dt;
      }
      if (!entry && d <= radius_m) entry = pts[i].timestamp;
      if (!entry) continue;
      arrivals[k] = {true, quantize_ms(*entry), i};
      cursor = i;
      break;
    }
  }
  return arrivals;
}

}  // namespace

std::vector<SectionTraversal> match_stop_passages(
    const TripTrace& trace, const Route& route, const IngestConfig& config,
    std::vector<std::string>* diagnostics) {
  std::vector<SectionTraversal> out;
  const std::vector<BusStop> stops = route.stops();
  const int n_stops = static_cast<int>(stops.size());

  std::vector<int> order(n_stops);
  for (int i = 0; i < n_stops; ++i)
    order[i] = trace.direction == TripDirection::Up ? i : n_stops - 1 - i;

  auto arrivals = stop_arrivals(trace, stops, order, config);

  auto note = [&](const std::string& msg) {
    if (diagnostics) diagnostics->push_back(trace.trip_id + ": " + msg);
  };

  for (int k = 0; k + 1 < n_stops; ++k) {
    // Section between stop order[k] and order[k+1]; section ids are defined
    // in the up direction.
    int section_id = trace.direction == TripDirection::Up ? order[k] + 1
                                                          : order[k];
    const RouteSection& section = route.section(section_id);
    if (!arrivals[k].present || !arrivals[k + 1].present) {
      note("section " + std::to_string(section_id) +
           " omitted: stop geofence not crossed");
      continue;
    }
    int64_t start_ms = to_millis(arrivals[k].time);
    int64_t end_ms = to_millis(arrivals[k + 1].time);
    if (end_ms <= start_ms) {
      note("section " + std::to_string(section_id) +
           " omitted: non-positive travel time");
      continue;
    }

    // Dwell at the section's start stop: the stationary time inside its
    // geofence, starting at the entry point.
    const BusStop& start_stop = stops[order[k]];
    size_t lo = arrivals[k].point_index;
    size_t hi = lo;
    while (hi + 1 < trace.points.size() &&
           haversine_m(trace.points[hi + 1].latitude,
                       trace.points[hi + 1].longitude, start_stop.latitude,
                       start_stop.longitude) <= config.geofence_radius_m)
      ++hi;
    double dwell = infer_dwell(
        std::span<const AvlPoint>(trace.points.data() + lo, hi - lo + 1),
        config.dwell_speed_kmh);

    SectionTraversal tr;
    tr.trip_id = trace.trip_id;
    tr.vehicle_id = trace.vehicle_id;
    tr.section_id = section_id;
    tr.section_start_time = arrivals[k].time;
    tr.travel_time_s = static_cast<double>(end_ms - start_ms) / 1000.0;
    tr.dwell_time_s = std::min(dwell, tr.travel_time_s);
    double running = tr.travel_time_s - tr.dwell_time_s;
    if (running <= 0) {
      note("section " + std::to_string(section_id) +
           " omitted: zero running time");
      continue;
    }
    tr.running_speed_mps = section.length_m / running;
    tr.day_of_week = day_of_week(tr.section_start_time);
    tr.lup = section.lup;
    out.push_back(std::move(tr));
  }
  return out;
}

void write_traversal_csv(std::ostream& out,
                         std::span<const SectionTraversal> traversals) {
  out << "trip_id,vehicle_id,section_id,section_start_time,travel_time_s,"
         "dwell_time_s,running_speed_mps,day_of_week,lup\n";
  for (const auto& t : traversals) {
    out << t.trip_id << ',' << t.vehicle_id << ',' << t.section_id << ','
        << format_iso_datetime(t.section_start_time) << ','
        << format_double(t.travel_time_s) << ','
        << format_double(t.dwell_time_s) << ','
        << format_double(t.running_speed_mps) << ',' << t.day_of_week << ','
        << lup_name(t.lup) << '\n';
  }
}

std::vector<SectionTraversal> read_traversal_csv(std::istream& in) {
  std::vector<SectionTraversal> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (trim(line) !=
      "trip_id,vehicle_id,section_id,section_start_time,travel_time_s,"
      "dwell_time_s,running_speed_mps,day_of_week,lup")
    throw IngestError("traversal CSV header mismatch");
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 9)
      throw IngestError("traversal CSV row " + std::to_string(row) +
                        ": wrong field count");
    SectionTraversal t;
    t.trip_id = f[0];
    t.vehicle_id = f[1];
    t.section_id = static_cast<int>(parse_long(f[2]));
    t.section_start_time = parse_iso_datetime(f[3]);
    t.travel_time_s = parse_double(f[4]);
    t.dwell_time_s = parse_double(f[5]);
    t.running_speed_mps = parse_double(f[6]);
    t.day_of_week = static_cast<int>(parse_long(f[7]));
    t.lup = parse_lup(f[8]);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace bte
