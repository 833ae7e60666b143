// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bte/avl_ingest.hpp"
#include "bte/boosted_trees.hpp"
#include "bte/hybrid.hpp"
#include "bte/route_model.hpp"

namespace bte {

struct ReplayRow {
  std::string trip_id;
  int section_id = 0;
  Timestamp section_start_time = 0;
  SpatialClass cls = SpatialClass::NS;
  double actual_s = 0;
  double ftt_s = 0;        // forest alone
  double hybrid_att_s = 0;
  bool used_fallback = false;
  std::optional<std::string> preceding_trip_id;
  std::optional<Timestamp> probe_start_time;
};

struct ModelScore {
  std::optional<double> r2;  // absent when the stratum is degenerate
  double mae = 0;
  size_t n = 0;
};

struct ClassSummary {
  ModelScore forest;       // non-fallback rows
  ModelScore hybrid;       // non-fallback rows
  ModelScore fallback;     // fallback stratum, hybrid == forest there
};

struct TripTotals {
  std::string trip_id;
  size_t n_sections = 0;
  size_t fallback_sections = 0;
  double actual_total = 0;
  double forest_total = 0;
  double hybrid_total = 0;
  double forest_mean_abs_error = 0;  // mean over sections
  double hybrid_mean_abs_error = 0;
};

struct ReplayResult {
  std::vector<ReplayRow> rows;  // global time order
  std::map<SpatialClass, ClassSummary> summary;
  std::vector<std::string> diagnostics;
};

// Time-ordered replay of the test traversals. The probe store starts from
// `warmup` (earlier splits) and each test traversal becomes visible only
// after every prediction at its own start instant has been issued; queries
// are strictly-earlier, so no prediction ever sees the future.
ReplayResult replay(std::span<const SectionTraversal> test,
                    const BoostedForest& forest, const HybridWeights& weights,
                    const Route& route, double window_s = 1800.0,
                    std::span<const SectionTraversal> warmup = {});

std::vector<TripTotals> per_trip_totals(const ReplayResult& result);

// Three deterministic CSVs under `dir`: replay_sections.csv,
// replay_trips.csv, replay_summary.csv.
void emit_report(const ReplayResult& result, const std::string& dir);

}  // namespace bte
