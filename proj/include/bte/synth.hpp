// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bte/avl_ingest.hpp"
#include "bte/route_model.hpp"
#include "bte/timeutil.hpp"

namespace bte {

// The nine-section demo route (Tumakuru city-service geometry) with
// synthesized stop coordinates along the corridor bearing.
Route demo_route();

struct SynthConfig {
  uint64_t seed = 7;
  int n_trips = 600;
  int trips_per_day = 60;
  double headway_s = 600.0;          // departure spacing within a day
  double first_departure_s = 6.5 * 3600;  // seconds after midnight
  Timestamp first_day = 0;           // midnight of day 1; 0 = 2021-03-01
  double congestion_rho = 0.92;      // AR(1) memory between departures
  double congestion_sigma = 0.24;    // stationary std of the multiplier
  double noise_sigma_s = 6.0;        // i.i.d. per-traversal noise, seconds
  double signal_delay_spread = 1.0;  // SIS delay ~ U(0, 2*ID*spread)
  double dwell_mean_s = 15.0;
};

// Section-level traversal records for n_trips runs of the route. Consecutive
// trips share a slow-moving congestion state, so probe information is
// genuinely predictive; SIS sections carry extra independent signal-delay
// variance.
std::vector<SectionTraversal> generate_traversals(const Route& route,
                                                  const SynthConfig& config);

// One trip's kinematic plan for GPS-trace synthesis.
struct TripPlan {
  Timestamp start = 0;                  // departure instant at the origin stop
  std::vector<double> running_time_s;   // per section
  std::vector<double> dwell_s;          // at each stop, same count as stops
};

// Gap-free AVL trace following the route geometry at piecewise-constant
// speed. `truth_stop_passages`, when given, receives the exact instant the
// bus reaches each stop point (before any dwell; origin = start).
std::vector<AvlPoint> generate_trace(
    const Route& route, const TripPlan& plan, const std::string& vehicle_id,
    double sample_interval_s = 10.0,
    std::vector<Timestamp>* truth_stop_passages = nullptr);

}  // namespace bte
