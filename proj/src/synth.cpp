// SPDX-License-Identifier: Apache-2.0
#include "bte/synth.hpp"

#include <cmath>
#include <random>

#include "bte/geo.hpp"

namespace bte {

namespace {

struct SectionSpec {
  const char* start_name;
  const char* end_name;
  double length_m;
  LandUsePattern lup;
  bool signalized;
  double delay_s;
};

const SectionSpec kDemoSections[] = {
    {"Tumkur Bus Stand", "CallTax Circle", 600, LandUsePattern::CBD, false, 0},
    {"CallTax Circle", "Town Hall Circle", 450, LandUsePattern::CBD, true, 47},
    {"Town Hall Circle", "Bhadranna Choultry", 750, LandUsePattern::CBD, true,
     45},
    {"Bhadranna Choultry", "Siddaganga High School", 650, LandUsePattern::IC,
     false, 0},
    {"Siddaganga High School", "Government University", 550,
     LandUsePattern::IC, true, 57},
    {"Government University", "SIT College", 1000, LandUsePattern::ISU, false,
     0},
    {"SIT College", "Batawadi", 350, LandUsePattern::ISU, true, 20},
    {"Batawadi", "APMC Yard", 400, LandUsePattern::OSU, false, 0},
    {"APMC Yard", "Kyathasandra", 2200, LandUsePattern::OSU, false, 0},
};

}  // namespace

Route demo_route() {
  // Stops laid out along the corridor bearing from the bus stand; the real
  // stop coordinates are not published, so these are representative only.
  const double origin_lat = 13.34286, origin_lon = 77.09886;
  const double bearing_deg = 205.0;

  Route route;
  route.route_id = "tumakuru_tbs_kyathasandra";
  double cumulative = 0.0;
  BusStop prev{1, kDemoSections[0].start_name, origin_lat, origin_lon};
  for (size_t i = 0; i < std::size(kDemoSections); ++i) {
    const SectionSpec& spec = kDemoSections[i];
    cumulative += spec.length_m;
    BusStop end;
    end.stop_id = static_cast<int>(i) + 2;
    end.name = spec.end_name;
    destination_point(origin_lat, origin_lon, bearing_deg, cumulative,
                      end.latitude, end.longitude);

    RouteSection s;
    s.section_id = static_cast<int>(i) + 1;
    s.start_stop = prev;
    s.end_stop = end;
    s.length_m = spec.length_m;
    s.lup = spec.lup;
    s.has_signalized_intersection = spec.signalized;
    s.intersection_delay_s = spec.delay_s;
    s.dwell_time_s = 15.0;
    route.sections.push_back(s);
    prev = end;
  }
  return route;
}

namespace {

// Free-flow running speed by land use, m/s.
double base_speed_mps(LandUsePattern lup) {
  switch (lup) {
    case LandUsePattern::CBD: return 5.5;
    case LandUsePattern::IC: return 6.5;
    case LandUsePattern::ISU: return 7.5;
    case LandUsePattern::OSU: return 9.0;
  }
  return 7.0;
}

// Morning/evening peaks, learnable from the start-time feature.
double peak_factor(double seconds_since_midnight) {
  double h = seconds_since_midnight / 3600.0;
  double morning = std::exp(-0.5 * (h - 9.0) * (h - 9.0) / (1.5 * 1.5));
  double evening = std::exp(-0.5 * (h - 17.5) * (h - 17.5) / (1.5 * 1.5));
  return 1.0 + 0.30 * morning + 0.25 * evening;
}

double weekend_factor(int dow) { return dow >= 5 ? 0.85 : 1.0; }

}  // namespace

std::vector<SectionTraversal> generate_traversals(const Route& route,
                                                  const SynthConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Timestamp day0 = config.first_day != 0
                       ? config.first_day
                       : static_cast<double>(days_from_civil(2021, 3, 1)) *
                             86400.0;

  std::vector<SectionTraversal> out;
  out.reserve(static_cast<size_t>(config.n_trips) * route.sections.size());

  double congestion = 0.0;  // AR(1), stationary std = congestion_sigma
  double innovation =
      config.congestion_sigma *
      std::sqrt(1.0 - config.congestion_rho * config.congestion_rho);

  for (int k = 0; k < config.n_trips; ++k) {
    congestion = config.congestion_rho * congestion + innovation * gauss(rng);

    int day = k / config.trips_per_day;
    int slot = k % config.trips_per_day;
    Timestamp start = day0 + day * 86400.0 + config.first_departure_s +
                      slot * config.headway_s;

    Timestamp clock = start;
    for (const auto& section : route.sections) {
      double tod = seconds_since_midnight(clock);
      double slowdown = peak_factor(tod) * weekend_factor(day_of_week(clock)) *
                        (1.0 + congestion);
      if (slowdown < 0.3) slowdown = 0.3;
      double running =
          section.length_m / base_speed_mps(section.lup) * slowdown +
          config.noise_sigma_s * gauss(rng);
      double min_running = section.length_m / 16.0;  // cap at ~58 km/h
      if (running < min_running) running = min_running;
      double delay = 0.0;
      if (section.has_signalized_intersection) {
        // Clearance-mode signals: delay varies trip to trip, independent of
        // everything else, which is what makes SIS the harder class. It is
        // kept out of the running speed, mirroring the decomposition the
        // estimator assumes (running + dwell + intersection delay).
        delay = 2.0 * section.intersection_delay_s *
                config.signal_delay_spread * uniform(rng);
      }
      double dwell = config.dwell_mean_s * (0.5 + uniform(rng));

      SectionTraversal tr;
      tr.trip_id = "synth#" + std::to_string(k + 1);
      tr.vehicle_id = "SYN-" + std::to_string(k % 25 + 1);
      tr.section_id = section.section_id;
      tr.section_start_time = quantize_ms(clock);
      tr.dwell_time_s = std::round(dwell * 1000.0) / 1000.0;
      tr.travel_time_s =
          std::round((running + delay + dwell) * 1000.0) / 1000.0;
      running = std::round(running * 1000.0) / 1000.0;
      tr.running_speed_mps = section.length_m / running;
      tr.day_of_week = day_of_week(tr.section_start_time);
      tr.lup = section.lup;
      out.push_back(std::move(tr));

      clock += tr.travel_time_s;
    }
  }
  return out;
}

std::vector<AvlPoint> generate_trace(
    const Route& route, const TripPlan& plan, const std::string& vehicle_id,
    double sample_interval_s, std::vector<Timestamp>* truth_stop_passages) {
  const auto stops = route.stops();
  const size_t n_sections = route.sections.size();

  // Piecewise timeline: dwell at stop k, then constant-speed run to k+1.
  struct Phase {
    Timestamp t0, t1;
    size_t from_stop;      // position anchor
    double speed_mps;      // 0 while dwelling
    double section_len;    // 0 while dwelling
  };
  std::vector<Phase> phases;
  std::vector<Timestamp> stop_arrival(stops.size());  // at the stop point
  Timestamp t = plan.start;
  stop_arrival[0] = t;
  for (size_t j = 0; j < n_sections; ++j) {
    double dwell = j < plan.dwell_s.size() ? plan.dwell_s[j] : 0.0;
    phases.push_back({t, t + dwell, j, 0.0, 0.0});
    t += dwell;
    double len = route.sections[j].length_m;
    double v = len / plan.running_time_s[j];
    phases.push_back({t, t + plan.running_time_s[j], j, v, len});
    t += plan.running_time_s[j];
    stop_arrival[j + 1] = t;
  }
  double final_dwell =
      plan.dwell_s.size() > n_sections ? plan.dwell_s[n_sections] : 30.0;
  phases.push_back({t, t + final_dwell, n_sections, 0.0, 0.0});
  Timestamp t_end = t + final_dwell;

  if (truth_stop_passages) {
    // Ground truth is the instant the bus is at the stop point; the matcher
    // estimates it as the chord's closest approach to the stop.
    *truth_stop_passages = stop_arrival;
  }

  auto position = [&](Timestamp at, double& lat, double& lon, double& v_out) {
    for (const auto& ph : phases) {
      if (at > ph.t1) continue;
      const BusStop& a = stops[ph.from_stop];
      if (ph.speed_mps == 0.0) {
        lat = a.latitude;
        lon = a.longitude;
        v_out = 0.0;
      } else {
        const BusStop& b = stops[ph.from_stop + 1];
        double frac = (at - ph.t0) * ph.speed_mps / ph.section_len;
        lat = a.latitude + frac * (b.latitude - a.latitude);
        lon = a.longitude + frac * (b.longitude - a.longitude);
        v_out = ph.speed_mps;
      }
      return;
    }
    lat = stops.back().latitude;
    lon = stops.back().longitude;
    v_out = 0.0;
  };

  std::vector<AvlPoint> points;
  double odometer_km = 6000.0;
  double prev_lat = 0, prev_lon = 0;
  for (Timestamp at = plan.start; at <= t_end + 1e-9;
       at += sample_interval_s) {
    AvlPoint p;
    p.vehicle_id = vehicle_id;
    p.timestamp = at;
    double v;
    position(at, p.latitude, p.longitude, v);
    p.speed_kmh = v * 3.6;
    if (!points.empty())
      odometer_km +=
          haversine_m(prev_lat, prev_lon, p.latitude, p.longitude) / 1000.0;
    p.odometer_km = std::round(odometer_km * 100.0) / 100.0;
    prev_lat = p.latitude;
    prev_lon = p.longitude;
    points.push_back(std::move(p));
  }
  // Close the trace exactly at trip end so the terminus position is sampled.
  if (points.empty() || points.back().timestamp < t_end - 1e-9) {
    AvlPoint p;
    p.vehicle_id = vehicle_id;
    p.timestamp = t_end;
    double v;
    position(t_end, p.latitude, p.longitude, v);
    p.speed_kmh = v * 3.6;
    if (!points.empty())
      odometer_km +=
          haversine_m(prev_lat, prev_lon, p.latitude, p.longitude) / 1000.0;
    p.odometer_km = std::round(odometer_km * 100.0) / 100.0;
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace bte
