// SPDX-License-Identifier: Apache-2.0
#include "bte/hybrid.hpp"

#include <algorithm>
#include <cmath>

namespace bte {

HybridWeights HybridWeights::from_report(const CalibrationReport& report) {
  HybridWeights w;
  w.ns = ClassWeights{report.ns.w1, report.ns.w2};
  w.sis = ClassWeights{report.sis.w1, report.sis.w2};
  if (w.ns.w1 < 0 || w.ns.w2 < 0 || w.sis.w1 < 0 || w.sis.w2 < 0)
    throw HybridError("negative fusion weight");
  return w;
}

HybridWeights HybridWeights::from_values(double ns_w1, double ns_w2,
                                         double sis_w1, double sis_w2) {
  if (ns_w1 < 0 || ns_w2 < 0 || sis_w1 < 0 || sis_w2 < 0)
    throw HybridError("negative fusion weight");
  if (std::abs(ns_w1 + ns_w2 - 1.0) > 1e-9 ||
      std::abs(sis_w1 + sis_w2 - 1.0) > 1e-9)
    throw HybridError("fusion weights must sum to 1");
  return HybridWeights{{ns_w1, ns_w2}, {sis_w1, sis_w2}};
}

void PrecedingTripStore::insert(const SectionTraversal& traversal) {
  auto& vec = by_section_[traversal.section_id];
  // Appends are nearly time-ordered during replay; keep the vector sorted.
  auto pos = std::upper_bound(
      vec.begin(), vec.end(), traversal.section_start_time,
      [](Timestamp t, const SectionTraversal& tr) {
        return t < tr.section_start_time;
      });
  vec.insert(pos, traversal);
  ++count_;
}

void PrecedingTripStore::insert_all(
    std::span<const SectionTraversal> traversals) {
  for (const auto& tr : traversals) insert(tr);
}

std::optional<SectionTraversal> PrecedingTripStore::select_preceding(
    int section_id, Timestamp t, double window_s) const {
  auto it = by_section_.find(section_id);
  if (it == by_section_.end()) return std::nullopt;
  const auto& vec = it->second;
  auto pos = std::lower_bound(vec.begin(), vec.end(), t,
                              [](const SectionTraversal& tr, Timestamp t2) {
                                return tr.section_start_time < t2;
                              });
  // pos is the first start >= t; walk back to the nearest strictly-earlier.
  while (pos != vec.begin()) {
    --pos;
    double dt = t - pos->section_start_time;
    if (dt <= 0) continue;
    if (dt >= window_s) return std::nullopt;
    return *pos;
  }
  return std::nullopt;
}

double preceding_running_time(const SectionTraversal& traversal,
                              const RouteSection& section) {
  if (traversal.section_id != section.section_id)
    throw HybridError("probe/section mismatch");
  if (!(traversal.running_speed_mps > 0))
    throw HybridError("degenerate probe");
  return section.length_m / traversal.running_speed_mps;
}

double dynamic_travel_time(double prt_s, const RouteSection& section) {
  if (spatial_class(section) != SpatialClass::SIS)
    throw HybridError("dynamic_travel_time called on NS section");
  return prt_s + section.dwell_time_s + section.intersection_delay_s;
}

AttResult adjusted_travel_time(double ftt_s, std::optional<double> probe_s,
                               SpatialClass cls, const HybridWeights& weights) {
  if (!(ftt_s > 0)) throw HybridError("non-positive FTT");
  if (!probe_s) return {ftt_s, true};
  const ClassWeights& w = weights.for_class(cls);
  return {w.w1 * ftt_s + w.w2 * *probe_s, false};
}

Timestamp bus_arrival_time(Timestamp c_time, double att_s) {
  if (!(att_s > 0)) throw HybridError("non-positive ATT");
  return c_time + att_s;
}

std::vector<PredictionRecord> predict_downstream(
    const Route& route, int start_section_id, Timestamp c_time,
    const BoostedForest& forest, const HybridWeights& weights,
    const PrecedingTripStore& store, double window_s) {
  if (start_section_id < 1 ||
      start_section_id > static_cast<int>(route.sections.size()))
    throw HybridError("invalid start section id");

  std::vector<PredictionRecord> records;
  Timestamp section_clock = c_time;
  for (int j = start_section_id;
       j <= static_cast<int>(route.sections.size()); ++j) {
    const RouteSection& section = route.section(j);
    SpatialClass cls = spatial_class(section);

    PredictionRecord rec;
    rec.section_id = j;
    rec.c_time = section_clock;

    FeatureVector fv{day_of_week(section_clock),
                     seconds_since_midnight(section_clock), j,
                     lup_code(section.lup)};
    rec.ftt_s = forest.predict(fv);

    // Probe window anchored at the real current time: projected section
    // clocks lie in the future and must not widen the lookup.
    std::optional<SectionTraversal> probe =
        store.select_preceding(j, c_time, window_s);
    std::optional<double> probe_s;
    if (probe) {
      try {
        if (cls == SpatialClass::SIS) {
          double prt = preceding_running_time(*probe, section);
          probe_s = dynamic_travel_time(prt, section);
        } else {
          probe_s = probe->travel_time_s;
        }
        rec.preceding_trip_id = probe->trip_id;
      } catch (const HybridError& e) {
        rec.diagnostic = e.what();
      }
    }
    rec.probe_s = probe_s;

    AttResult att = adjusted_travel_time(rec.ftt_s, probe_s, cls, weights);
    rec.att_s = att.att_s;
    rec.used_fallback = att.used_fallback;
    rec.bat = bus_arrival_time(rec.c_time, rec.att_s);

    section_clock = rec.bat;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace bte
