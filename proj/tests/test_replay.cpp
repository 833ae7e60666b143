// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bte/calibration.hpp"
#include "bte/csvutil.hpp"
#include "bte/replay.hpp"
#include "bte/synth.hpp"

using namespace bte;

namespace {

std::vector<Sample> to_samples(const std::vector<SectionTraversal>& rows) {
  std::vector<Sample> out;
  for (const auto& t : rows) {
    FeatureVector fv{t.day_of_week,
                     seconds_since_midnight(t.section_start_time),
                     t.section_id, lup_code(t.lup)};
    out.push_back({fv, t.travel_time_s});
  }
  return out;
}

struct Fixture {
  Route route = demo_route();
  std::vector<SectionTraversal> train, test;
  BoostedForest forest;
  HybridWeights weights =
      HybridWeights::from_values(0.56, 0.44, 0.45, 0.55);

  explicit Fixture(int n_trips = 120) {
    SynthConfig cfg;
    cfg.n_trips = n_trips;
    auto all = generate_traversals(route, cfg);
    size_t cut = all.size() * 7 / 10;
    train.assign(all.begin(), all.begin() + cut);
    test.assign(all.begin() + cut, all.end());
    TrainConfig tc;
    tc.n_estimators = 40;
    forest = fit(to_samples(train), tc);
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("replay on correlated synthetic data improves on the forest") {
  Fixture fx(200);
  ReplayResult result = replay(fx.test, fx.forest, fx.weights, fx.route,
                               1800.0, fx.train);
  REQUIRE_FALSE(result.rows.empty());

  for (SpatialClass cls : {SpatialClass::NS, SpatialClass::SIS}) {
    const ClassSummary& s = result.summary.at(cls);
    REQUIRE(s.hybrid.r2);
    REQUIRE(s.forest.r2);
    CHECK(*s.hybrid.r2 > *s.forest.r2);
    CHECK(s.hybrid.mae < s.forest.mae);
  }
}

TEST_CASE("replay forest column equals direct forest prediction") {
  Fixture fx(60);
  ReplayResult result = replay(fx.test, fx.forest, fx.weights, fx.route,
                               1800.0, fx.train);
  for (const auto& row : result.rows) {
    FeatureVector fv{day_of_week(row.section_start_time),
                     seconds_since_midnight(row.section_start_time),
                     row.section_id,
                     lup_code(fx.route.section(row.section_id).lup)};
    CHECK(row.ftt_s == fx.forest.predict(fv));
  }
}

TEST_CASE("replay is anti-leaking") {
  Fixture fx(80);
  ReplayResult result = replay(fx.test, fx.forest, fx.weights, fx.route,
                               1800.0, fx.train);
  // Every consumed probe started strictly before the prediction instant.
  for (const auto& row : result.rows)
    if (row.probe_start_time)
      CHECK(*row.probe_start_time < row.section_start_time);

  // Permuting the input order (future events included) changes nothing:
  // the replay re-sorts and the store only ever serves the past.
  auto shuffled = fx.test;
  std::mt19937_64 rng(4);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  ReplayResult again = replay(shuffled, fx.forest, fx.weights, fx.route,
                              1800.0, fx.train);
  REQUIRE(again.rows.size() == result.rows.size());
  for (size_t i = 0; i < result.rows.size(); ++i) {
    CHECK(again.rows[i].trip_id == result.rows[i].trip_id);
    CHECK(again.rows[i].hybrid_att_s == result.rows[i].hybrid_att_s);
    CHECK(again.rows[i].ftt_s == result.rows[i].ftt_s);
  }
}

TEST_CASE("empty test set yields empty result") {
  Fixture fx(30);
  ReplayResult result = replay({}, fx.forest, fx.weights, fx.route);
  CHECK(result.rows.empty());
  CHECK(result.summary.at(SpatialClass::NS).forest.n == 0);
  CHECK_FALSE(result.summary.at(SpatialClass::NS).forest.r2);
}

TEST_CASE("per-trip totals sum the section rows") {
  Fixture fx(40);
  ReplayResult result = replay(fx.test, fx.forest, fx.weights, fx.route,
                               1800.0, fx.train);
  auto totals = per_trip_totals(result);
  REQUIRE_FALSE(totals.empty());

  const TripTotals& t = totals.front();
  double actual = 0, forest_sum = 0, hybrid_sum = 0;
  size_t n = 0;
  for (const auto& row : result.rows) {
    if (row.trip_id != t.trip_id) continue;
    actual += row.actual_s;
    forest_sum += row.ftt_s;
    hybrid_sum += row.hybrid_att_s;
    ++n;
  }
  CHECK(t.n_sections == n);
  CHECK(t.actual_total == doctest::Approx(actual));
  CHECK(t.forest_total == doctest::Approx(forest_sum));
  CHECK(t.hybrid_total == doctest::Approx(hybrid_sum));
}

TEST_CASE("emit_report writes deterministic, self-consistent CSVs") {
  Fixture fx(50);
  ReplayResult result = replay(fx.test, fx.forest, fx.weights, fx.route,
                               1800.0, fx.train);

  auto dir = std::filesystem::temp_directory_path() / "bte_replay_test";
  std::filesystem::remove_all(dir);
  emit_report(result, dir.string());

  std::string sections = slurp(dir / "replay_sections.csv");
  std::string trips = slurp(dir / "replay_trips.csv");
  std::string summary = slurp(dir / "replay_summary.csv");
  CHECK_FALSE(sections.empty());
  CHECK_FALSE(trips.empty());
  CHECK_FALSE(summary.empty());

  // Determinism: emitting again is byte-identical.
  auto dir2 = std::filesystem::temp_directory_path() / "bte_replay_test2";
  std::filesystem::remove_all(dir2);
  emit_report(result, dir2.string());
  CHECK(slurp(dir2 / "replay_sections.csv") == sections);
  CHECK(slurp(dir2 / "replay_trips.csv") == trips);
  CHECK(slurp(dir2 / "replay_summary.csv") == summary);

  // Score consistency: recompute the NS hybrid R2 from the section CSV.
  std::istringstream in(sections);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> actual, hybrid;
  while (std::getline(in, line)) {
    auto f = split_csv_line(line);
    REQUIRE(f.size() == 9);
    if (f[3] == "NS" && f[7] == "0") {
      actual.push_back(parse_double(f[4]));
      hybrid.push_back(parse_double(f[6]));
    }
  }
  double recomputed = r_squared(actual, hybrid);
  CHECK(recomputed ==
        doctest::Approx(*result.summary.at(SpatialClass::NS).hybrid.r2)
            .epsilon(1e-9));

  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("empty result emits headers-only files") {
  ReplayResult empty;
  auto dir = std::filesystem::temp_directory_path() / "bte_replay_empty";
  std::filesystem::remove_all(dir);
  emit_report(empty, dir.string());
  CHECK(slurp(dir / "replay_sections.csv") ==
        "trip_id,section_id,section_start_time,spatial_class,actual_s,"
        "ftt_s,hybrid_att_s,used_fallback,preceding_trip_id\n");
  std::filesystem::remove_all(dir);
}
