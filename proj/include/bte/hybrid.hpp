// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bte/avl_ingest.hpp"
#include "bte/boosted_trees.hpp"
#include "bte/calibration.hpp"
#include "bte/route_model.hpp"
#include "bte/timeutil.hpp"

namespace bte {

class HybridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-class fusion weights; both weights non-negative and summing to 1.
struct ClassWeights {
  double w1 = 1.0;
  double w2 = 0.0;
};

struct HybridWeights {
  ClassWeights ns;
  ClassWeights sis;

  const ClassWeights& for_class(SpatialClass c) const {
    return c == SpatialClass::SIS ? sis : ns;
  }
  static HybridWeights from_report(const CalibrationReport& report);
  static HybridWeights from_values(double ns_w1, double ns_w2, double sis_w1,
                                   double sis_w2);
};

// Time-indexed traversal collection shared by all routes covering a section.
// Single writer, many readers; queries only ever see strictly earlier starts.
class PrecedingTripStore {
 public:
  void insert(const SectionTraversal& traversal);
  void insert_all(std::span<const SectionTraversal> traversals);
  size_t size() const { return count_; }

  // Among traversals of `section_id` with 0 < t - start < window_s, the one
  // minimizing t - start; nullopt when none.
  std::optional<SectionTraversal> select_preceding(
      int section_id, Timestamp t, double window_s = 1800.0) const;

 private:
  std::map<int, std::vector<SectionTraversal>> by_section_;  // sorted by start
  size_t count_ = 0;
};

// PRT = section length / probe running speed.
double preceding_running_time(const SectionTraversal& traversal,
                              const RouteSection& section);

// DTT = PRT + standard dwell + average intersection delay; SIS only.
double dynamic_travel_time(double prt_s, const RouteSection& section);

struct AttResult {
  double att_s = 0;
  bool used_fallback = false;
};

// ATT = w1 * FTT + w2 * probe; probe absent falls back to FTT alone.
AttResult adjusted_travel_time(double ftt_s, std::optional<double> probe_s,
                               SpatialClass cls, const HybridWeights& weights);

Timestamp bus_arrival_time(Timestamp c_time, double att_s);

struct PredictionRecord {
  int section_id = 0;
  Timestamp c_time = 0;
  double ftt_s = 0;
  std::optional<double> probe_s;  // PTT for NS, DTT for SIS
  double att_s = 0;
  Timestamp bat = 0;
  bool used_fallback = false;
  std::optional<std::string> preceding_trip_id;
  std::string diagnostic;
};

// Chain sections from start_section_id to the terminus. C_time of the first
// section is c_time; each later section starts at the previous BAT. Probe
// lookups for every section use the real c_time so no projected (future)
// information is consumed.
std::vector<PredictionRecord> predict_downstream(
    const Route& route, int start_section_id, Timestamp c_time,
    const BoostedForest& forest, const HybridWeights& weights,
    const PrecedingTripStore& store, double window_s = 1800.0);

}  // namespace bte
