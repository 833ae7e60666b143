// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bte/route_model.hpp"
#include "bte/timeutil.hpp"

namespace bte {

struct AvlPoint {
  std::string vehicle_id;
  Timestamp timestamp = 0;
  double latitude = 0;
  double longitude = 0;
  double odometer_km = 0;
  double speed_kmh = 0;
};

struct RowDiagnostic {
  std::string vehicle_id;  // empty when the row never parsed far enough
  size_t row = 0;          // 1-based, counting the header as row 1
  std::string reason;
};

struct AvlParseResult {
  std::vector<AvlPoint> points;
  std::vector<RowDiagnostic> rejected;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All paper-gap thresholds of the ingestion pipeline, config-overridable.
struct IngestConfig {
  double max_speed_kmh = 100.0;
  double bbox_pad_m = 500.0;
  double geofence_radius_m = 30.0;
  double dwell_speed_kmh = 2.0;
  double max_gap_s = 120.0;
  // Longest sample-to-sample span across which a geofence crossing may be
  // interpolated; larger holes leave the stop unmatched.
  double max_interp_gap_s = 15.0;
};

struct CleanStats {
  size_t input = 0;
  size_t dropped_duplicate_time = 0;
  size_t dropped_non_monotonic = 0;
  size_t dropped_speed = 0;
  size_t dropped_out_of_bbox = 0;
  size_t kept = 0;
};

enum class TripDirection { Up, Down };

struct TripTrace {
  std::string trip_id;
  std::string vehicle_id;
  TripDirection direction = TripDirection::Up;
  std::vector<AvlPoint> points;
};

struct SectionTraversal {
  std::string trip_id;
  std::string vehicle_id;
  int section_id = 0;
  Timestamp section_start_time = 0;  // arrival at the section's start stop
  double travel_time_s = 0;          // arrival-to-arrival, includes start dwell
  double dwell_time_s = 0;
  double running_speed_mps = 0;      // length / (travel - dwell)
  int day_of_week = 0;
  LandUsePattern lup = LandUsePattern::CBD;
};

// Header must match the Table-1 AVL schema exactly:
// "Vehicle No,Date and Time,Latitude,Longitude,Odometer,Speed".
// Malformed rows are reported, never silently dropped.
AvlParseResult parse_avl_csv(std::istream& stream);

// Per-vehicle hygiene: monotonic time/odometer, speed cap, route bounding
// box (padded). Idempotent. Input may interleave vehicles; relative order
// within a vehicle is preserved.
std::vector<AvlPoint> clean(std::vector<AvlPoint> points, const Route& route,
                            const IngestConfig& config = {},
                            CleanStats* stats = nullptr);

// Cut each vehicle's stream into origin-to-terminus runs (both directions).
std::vector<TripTrace> segment_trips(const std::vector<AvlPoint>& points,
                                     const Route& route,
                                     const IngestConfig& config = {},
                                     std::vector<RowDiagnostic>* diagnostics =
                                         nullptr);

// Interpolated geofence-crossing arrival per stop; one traversal per section
// actually covered. Skipped stop geofences omit the adjacent sections with a
// diagnostic.
std::vector<SectionTraversal> match_stop_passages(
    const TripTrace& trace, const Route& route,
    const IngestConfig& config = {},
    std::vector<std::string>* diagnostics = nullptr);

// Total stationary time (speed below the dwell threshold) of a
// geofence-bounded sub-trace.
double infer_dwell(std::span<const AvlPoint> sub_trace,
                   double dwell_speed_kmh = 2.0);

// Traversal CSV, the interchange format consumed by train/calibrate/replay.
// Columns: trip_id,vehicle_id,section_id,section_start_time,travel_time_s,
// dwell_time_s,running_speed_mps,day_of_week,lup
void write_traversal_csv(std::ostream& out,
                         std::span<const SectionTraversal> traversals);
std::vector<SectionTraversal> read_traversal_csv(std::istream& in);

}  // namespace bte
