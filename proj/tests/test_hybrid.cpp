// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "bte/hybrid.hpp"
#include "bte/synth.hpp"

using namespace bte;

namespace {

SectionTraversal traversal(int section, Timestamp start, double travel,
                           double dwell, double speed,
                           const std::string& trip = "t1") {
  SectionTraversal t;
  t.trip_id = trip;
  t.vehicle_id = "v";
  t.section_id = section;
  t.section_start_time = start;
  t.travel_time_s = travel;
  t.dwell_time_s = dwell;
  t.running_speed_mps = speed;
  t.day_of_week = day_of_week(start);
  return t;
}

BoostedForest constant_forest(double value) {
  BoostedForest f;
  f.base_score = value;
  return f;
}

}  // namespace

TEST_CASE("select_preceding picks the nearest in-window traversal") {
  PrecedingTripStore store;
  Timestamp t = parse_avl_datetime("11-03-2021 15:14:00");
  store.insert(traversal(2, t - 25 * 60, 120, 10, 5, "far"));
  store.insert(traversal(2, t - 10 * 60, 130, 10, 5, "near"));

  auto probe = store.select_preceding(2, t);
  REQUIRE(probe);
  CHECK(probe->trip_id == "near");

  SUBCASE("window boundary excludes 31 minutes") {
    PrecedingTripStore s2;
    s2.insert(traversal(2, t - 31 * 60, 120, 10, 5));
    CHECK_FALSE(s2.select_preceding(2, t));
  }
  SUBCASE("exactly 30 minutes is outside the open window") {
    PrecedingTripStore s2;
    s2.insert(traversal(2, t - 30 * 60, 120, 10, 5));
    CHECK_FALSE(s2.select_preceding(2, t));
  }
  SUBCASE("empty store") {
    PrecedingTripStore s2;
    CHECK_FALSE(s2.select_preceding(2, t));
  }
  SUBCASE("future traversals are never returned") {
    PrecedingTripStore s2;
    s2.insert(traversal(2, t + 60, 120, 10, 5, "future"));
    s2.insert(traversal(2, t, 120, 10, 5, "simultaneous"));
    CHECK_FALSE(s2.select_preceding(2, t));
  }
}

TEST_CASE("preceding running time") {
  Route route = demo_route();
  // d = 600, RS = 10 -> 60 s
  CHECK(preceding_running_time(traversal(1, 0, 100, 0, 10.0),
                               route.section(1)) == doctest::Approx(60.0));
  // d = 2200, RS = 5 -> 440 s
  CHECK(preceding_running_time(traversal(9, 0, 500, 0, 5.0),
                               route.section(9)) == doctest::Approx(440.0));
  CHECK_THROWS_WITH_AS(preceding_running_time(traversal(1, 0, 100, 0, 0.0),
                                              route.section(1)),
                       doctest::Contains("degenerate probe"), HybridError);
}

TEST_CASE("dynamic travel time composes running, dwell, and signal delay") {
  Route route = demo_route();
  RouteSection s2 = route.section(2);  // ID = 47
  s2.dwell_time_s = 20;
  CHECK(dynamic_travel_time(100, s2) == doctest::Approx(167.0));

  RouteSection s7 = route.section(7);  // ID = 20
  s7.dwell_time_s = 0;
  CHECK(dynamic_travel_time(80, s7) == doctest::Approx(100.0));

  RouteSection zero = s2;
  zero.dwell_time_s = 0;
  zero.intersection_delay_s = 0;
  CHECK(dynamic_travel_time(0, zero) == doctest::Approx(0.0));

  CHECK_THROWS_AS(dynamic_travel_time(100, route.section(1)), HybridError);
}

TEST_CASE("adjusted travel time fusion") {
  HybridWeights w = HybridWeights::from_values(0.56, 0.44, 0.45, 0.55);

  auto ns = adjusted_travel_time(100, 120, SpatialClass::NS, w);
  CHECK(ns.att_s == doctest::Approx(108.8));
  CHECK_FALSE(ns.used_fallback);

  auto sis = adjusted_travel_time(200, 180, SpatialClass::SIS, w);
  CHECK(sis.att_s == doctest::Approx(189.0));

  auto fb = adjusted_travel_time(150, std::nullopt, SpatialClass::NS, w);
  CHECK(fb.att_s == doctest::Approx(150.0));
  CHECK(fb.used_fallback);

  CHECK_THROWS_AS(adjusted_travel_time(0, 120, SpatialClass::NS, w),
                  HybridError);
}

TEST_CASE("fusion stays between its inputs") {
  HybridWeights w = HybridWeights::from_values(0.3, 0.7, 0.9, 0.1);
  for (double ftt : {50.0, 100.0, 400.0})
    for (double probe : {40.0, 100.0, 500.0}) {
      auto r = adjusted_travel_time(ftt, probe, SpatialClass::SIS, w);
      CHECK(r.att_s >= std::min(ftt, probe) - 1e-12);
      CHECK(r.att_s <= std::max(ftt, probe) + 1e-12);
    }
}

TEST_CASE("weights constructors reject invalid values") {
  CHECK_THROWS_AS(HybridWeights::from_values(-0.1, 1.1, 0.5, 0.5),
                  HybridError);
  CHECK_THROWS_AS(HybridWeights::from_values(0.5, 0.4, 0.5, 0.5),
                  HybridError);
}

TEST_CASE("bus arrival time") {
  Timestamp t = parse_avl_datetime("11-03-2021 15:14:00");
  CHECK(format_avl_datetime(bus_arrival_time(t, 1261)) ==
        "11-03-2021 15:35:01");
  CHECK(bus_arrival_time(t, 0.0001) == doctest::Approx(t + 0.0001));
  Timestamp late = parse_avl_datetime("11-03-2021 23:59:30");
  CHECK(format_avl_datetime(bus_arrival_time(late, 60)) ==
        "12-03-2021 00:00:30");
  CHECK_THROWS_AS(bus_arrival_time(t, 0), HybridError);
}

TEST_CASE("predict_downstream chains sections") {
  Route route = demo_route();
  BoostedForest forest = constant_forest(120.0);
  HybridWeights w = HybridWeights::from_values(0.56, 0.44, 0.45, 0.55);
  Timestamp c_time = parse_avl_datetime("11-03-2021 15:14:00");

  SUBCASE("empty store gives all-fallback chain") {
    PrecedingTripStore store;
    auto records = predict_downstream(route, 1, c_time, forest, w, store);
    REQUIRE(records.size() == 9);
    double att_sum = 0;
    Timestamp prev_bat = c_time;
    for (const auto& r : records) {
      CHECK(r.used_fallback);
      CHECK(r.att_s == doctest::Approx(r.ftt_s));
      CHECK(r.bat - r.c_time == doctest::Approx(r.att_s).epsilon(1e-9));
      CHECK(r.bat > prev_bat);  // strictly increasing chain
      prev_bat = r.bat;
      att_sum += r.att_s;
    }
    // Telescoping: last BAT = c_time + sum of ATTs.
    CHECK(records.back().bat ==
          doctest::Approx(c_time + att_sum).epsilon(1e-12));
  }

  SUBCASE("probes present in every section") {
    PrecedingTripStore store;
    for (int j = 1; j <= 9; ++j)
      store.insert(traversal(j, c_time - 600, 150, 15,
                             route.section(j).length_m / 120.0, "probe"));
    auto records = predict_downstream(route, 1, c_time, forest, w, store);
    REQUIRE(records.size() == 9);
    for (const auto& r : records) {
      CHECK_FALSE(r.used_fallback);
      REQUIRE(r.preceding_trip_id);
      CHECK(*r.preceding_trip_id == "probe");
      // Anti-leakage: probe start strictly before the real current time.
      CHECK(r.probe_s.has_value());
    }
    // NS sections fuse raw PTT; SIS sections fuse DTT.
    const auto& ns_rec = records[0];  // section 1, NS
    CHECK(ns_rec.att_s == doctest::Approx(0.56 * ns_rec.ftt_s + 0.44 * 150));
    const auto& sis_rec = records[1];  // section 2, SIS
    double prt = route.section(2).length_m /
                 (route.section(2).length_m / 120.0);
    double dtt = prt + route.section(2).dwell_time_s +
                 route.section(2).intersection_delay_s;
    CHECK(sis_rec.att_s ==
          doctest::Approx(0.45 * sis_rec.ftt_s + 0.55 * dtt));
  }

  SUBCASE("single remaining section") {
    PrecedingTripStore store;
    auto records = predict_downstream(route, 9, c_time, forest, w, store);
    REQUIRE(records.size() == 1);
    CHECK(records[0].section_id == 9);
  }

  SUBCASE("invalid start section") {
    PrecedingTripStore store;
    CHECK_THROWS_AS(predict_downstream(route, 0, c_time, forest, w, store),
                    HybridError);
    CHECK_THROWS_AS(predict_downstream(route, 10, c_time, forest, w, store),
                    HybridError);
  }
}
