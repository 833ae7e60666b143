// SPDX-License-Identifier: Apache-2.0
#include "bte/replay.hpp"

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "bte/calibration.hpp"
#include "bte/csvutil.hpp"

namespace bte {

namespace {

ModelScore score(const std::vector<double>& actual,
                 const std::vector<double>& predicted) {
  ModelScore s;
  s.n = actual.size();
  if (s.n == 0) return s;
  double abs_sum = 0;
  for (size_t i = 0; i < actual.size(); ++i)
    abs_sum += std::abs(actual[i] - predicted[i]);
  s.mae = abs_sum / static_cast<double>(s.n);
  if (s.n >= 2) {
    try {
      s.r2 = r_squared(actual, predicted);
    } catch (const CalibrationError&) {
      // zero-variance stratum: leave r2 absent
    }
  }
  return s;
}

}  // namespace

ReplayResult replay(std::span<const SectionTraversal> test,
                    const BoostedForest& forest, const HybridWeights& weights,
                    const Route& route, double window_s,
                    std::span<const SectionTraversal> warmup) {
  std::vector<SectionTraversal> events(test.begin(), test.end());
  std::sort(events.begin(), events.end(),
            [](const SectionTraversal& a, const SectionTraversal& b) {
              if (a.section_start_time != b.section_start_time)
                return a.section_start_time < b.section_start_time;
              if (a.trip_id != b.trip_id) return a.trip_id < b.trip_id;
              return a.section_id < b.section_id;
            });

  PrecedingTripStore store;
  store.insert_all(warmup);

  ReplayResult result;
  for (const auto& ev : events) {
    const RouteSection& section = route.section(ev.section_id);
    SpatialClass cls = spatial_class(section);
    Timestamp t = ev.section_start_time;

    ReplayRow row;
    row.trip_id = ev.trip_id;
    row.section_id = ev.section_id;
    row.section_start_time = t;
    row.cls = cls;
    row.actual_s = ev.travel_time_s;

    FeatureVector fv{ev.day_of_week, seconds_since_midnight(t), ev.section_id,
                     lup_code(ev.lup)};
    row.ftt_s = forest.predict(fv);

    std::optional<SectionTraversal> probe =
        store.select_preceding(ev.section_id, t, window_s);
    std::optional<double> probe_s;
    if (probe) {
      try {
        if (cls == SpatialClass::SIS) {
          probe_s =
              dynamic_travel_time(preceding_running_time(*probe, section),
                                  section);
        } else {
          probe_s = probe->travel_time_s;
        }
        row.preceding_trip_id = probe->trip_id;
        row.probe_start_time = probe->section_start_time;
      } catch (const HybridError& e) {
        result.diagnostics.push_back(ev.trip_id + " section " +
                                     std::to_string(ev.section_id) + ": " +
                                     e.what());
      }
    }
    AttResult att = adjusted_travel_time(row.ftt_s, probe_s, cls, weights);
    row.hybrid_att_s = att.att_s;
    row.used_fallback = att.used_fallback;

    result.rows.push_back(std::move(row));
    store.insert(ev);
  }

  for (SpatialClass cls : {SpatialClass::NS, SpatialClass::SIS}) {
    std::vector<double> actual, ftt, att, fb_actual, fb_ftt;
    for (const auto& row : result.rows) {
      if (row.cls != cls) continue;
      if (row.used_fallback) {
        fb_actual.push_back(row.actual_s);
        fb_ftt.push_back(row.ftt_s);
      } else {
        actual.push_back(row.actual_s);
        ftt.push_back(row.ftt_s);
        att.push_back(row.hybrid_att_s);
      }
    }
    ClassSummary cs;
    cs.forest = score(actual, ftt);
    cs.hybrid = score(actual, att);
    cs.fallback = score(fb_actual, fb_ftt);
    result.summary[cls] = cs;
  }
  return result;
}

std::vector<TripTotals> per_trip_totals(const ReplayResult& result) {
  std::map<std::string, TripTotals> by_trip;
  for (const auto& row : result.rows) {
    TripTotals& t = by_trip[row.trip_id];
    t.trip_id = row.trip_id;
    ++t.n_sections;
    if (row.used_fallback) ++t.fallback_sections;
    t.actual_total += row.actual_s;
    t.forest_total += row.ftt_s;
    t.hybrid_total += row.hybrid_att_s;
    t.forest_mean_abs_error += std::abs(row.actual_s - row.ftt_s);
    t.hybrid_mean_abs_error += std::abs(row.actual_s - row.hybrid_att_s);
  }
  std::vector<TripTotals> out;
  out.reserve(by_trip.size());
  for (auto& [id, t] : by_trip) {
    t.forest_mean_abs_error /= static_cast<double>(t.n_sections);
    t.hybrid_mean_abs_error /= static_cast<double>(t.n_sections);
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

void emit_report(const ReplayResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  auto open = [&](const char* name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out)
      throw std::runtime_error(std::string("cannot write report file ") +
                               name + " in " + dir);
    return out;
  };

  {
    auto out = open("replay_sections.csv");
    out << "trip_id,section_id,section_start_time,spatial_class,actual_s,"
           "ftt_s,hybrid_att_s,used_fallback,preceding_trip_id\n";
    for (const auto& r : result.rows) {
      out << r.trip_id << ',' << r.section_id << ','
          << format_iso_datetime(r.section_start_time) << ','
          << spatial_class_name(r.cls) << ',' << format_double(r.actual_s)
          << ',' << format_double(r.ftt_s) << ','
          << format_double(r.hybrid_att_s) << ','
          << (r.used_fallback ? "1" : "0") << ','
          << (r.preceding_trip_id ? *r.preceding_trip_id : std::string())
          << '\n';
    }
  }
  {
    auto out = open("replay_trips.csv");
    out << "trip_id,n_sections,fallback_sections,actual_total_s,"
           "forest_total_s,hybrid_total_s,forest_mean_abs_error_s,"
           "hybrid_mean_abs_error_s\n";
    for (const auto& t : per_trip_totals(result)) {
      out << t.trip_id << ',' << t.n_sections << ',' << t.fallback_sections
          << ',' << format_double(t.actual_total) << ','
          << format_double(t.forest_total) << ','
          << format_double(t.hybrid_total) << ','
          << format_double(t.forest_mean_abs_error) << ','
          << format_double(t.hybrid_mean_abs_error) << '\n';
    }
  }
  {
    auto out = open("replay_summary.csv");
    out << "spatial_class,model,r2,mae_s,n\n";
    for (const auto& [cls, cs] : result.summary) {
      const char* name = spatial_class_name(cls);
      out << name << ",forest," << opt_str(cs.forest.r2) << ','
          << format_double(cs.forest.mae) << ',' << cs.forest.n << '\n';
      out << name << ",hybrid," << opt_str(cs.hybrid.r2) << ','
          << format_double(cs.hybrid.mae) << ',' << cs.hybrid.n << '\n';
      out << name << ",fallback," << opt_str(cs.fallback.r2) << ','
          << format_double(cs.fallback.mae) << ',' << cs.fallback.n << '\n';
    }
  }
}

}  // namespace bte
