// SPDX-License-Identifier: Apache-2.0
#include "bte/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "json.hpp"

namespace bte {

using nlohmann::json;

double r_squared(std::span<const double> actual,
                 std::span<const double> predicted) {
  if (actual.empty() || actual.size() != predicted.size())
    throw CalibrationError("series length mismatch or empty");
  const double n = static_cast<double>(actual.size());
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    double r = actual[i] - predicted[i];
    double d = actual[i] - mean;
    ss_res += r * r;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) throw CalibrationError("degenerate targets");
  return 1.0 - ss_res / ss_tot;
}

double pearson_correlation(std::span<const double> a,
                           std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw CalibrationError("series length mismatch or too short");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - mean_a;
    double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0)
    throw CalibrationError("degenerate series");
  double r = cov / std::sqrt(var_a * var_b);
  return std::clamp(r, -1.0, 1.0);
}

std::pair<double, double> compute_weights(double x1, double x2) {
  if (x1 <= 0 || x2 <= 0)
    throw CalibrationError("compute_weights requires positive x1, x2");
  double sum = x1 + x2;
  return {x1 / sum, x2 / sum};
}

namespace {

ClassCalibration calibrate_class(
    SpatialClass cls, std::span<const SectionTraversal> calibration,
    const BoostedForest& forest, const Route& route,
    std::span<const SectionTraversal> probe_pool, double window_s) {
  ClassCalibration out;

  std::vector<double> actual, predicted;
  for (const auto& tr : calibration) {
    if (spatial_class(route.section(tr.section_id)) != cls) continue;
    FeatureVector fv{tr.day_of_week, seconds_since_midnight(tr.section_start_time),
                     tr.section_id, lup_code(tr.lup)};
    actual.push_back(tr.travel_time_s);
    predicted.push_back(forest.predict(fv));
  }
  out.n_rows = actual.size();

  // Probe pairs: per section, nearest preceding traversal inside the window.
  std::map<int, std::vector<const SectionTraversal*>> by_section;
  for (const auto& tr : probe_pool) by_section[tr.section_id].push_back(&tr);
  for (auto& [sec, vec] : by_section)
    std::sort(vec.begin(), vec.end(),
              [](const SectionTraversal* a, const SectionTraversal* b) {
                return a->section_start_time < b->section_start_time;
              });

  std::vector<double> current, preceding;
  for (const auto& tr : calibration) {
    if (spatial_class(route.section(tr.section_id)) != cls) continue;
    auto it = by_section.find(tr.section_id);
    if (it == by_section.end()) continue;
    const SectionTraversal* best = nullptr;
    for (const SectionTraversal* p : it->second) {
      double dt = tr.section_start_time - p->section_start_time;
      if (dt > 0 && dt < window_s) best = p;  // sorted: last match is nearest
      if (p->section_start_time >= tr.section_start_time) break;
    }
    if (!best) continue;
    current.push_back(tr.travel_time_s);
    preceding.push_back(best->travel_time_s);
  }
  out.n_pairs = current.size();

  if (out.n_rows < 2 || out.n_pairs < 2) {
    out.diagnostic = "insufficient data for class";
    return out;
  }
  try {
    out.x1 = r_squared(actual, predicted);
    out.x2 = pearson_correlation(current, preceding);
  } catch (const CalibrationError& e) {
    out.diagnostic = e.what();
    return out;
  }
  if (out.x1 <= 0 || out.x2 <= 0) {
    // Eq. 5 would leave the [0,1] range; fall back to the forest alone.
    out.clamped = true;
    out.w1 = 1.0;
    out.w2 = 0.0;
    out.diagnostic = "non-positive x1 or x2; weights clamped to forest-only";
  } else {
    auto [w1, w2] = compute_weights(out.x1, out.x2);
    out.w1 = w1;
    out.w2 = w2;
  }
  out.present = true;
  return out;
}

json class_to_json(const ClassCalibration& c) {
  return json{{"present", c.present}, {"x1", c.x1},       {"x2", c.x2},
              {"w1", c.w1},           {"w2", c.w2},       {"clamped", c.clamped},
              {"n_rows", c.n_rows},   {"n_pairs", c.n_pairs},
              {"diagnostic", c.diagnostic}};
}

ClassCalibration class_from_json(const json& j) {
  ClassCalibration c;
  c.present = j.at("present").get<bool>();
  c.x1 = j.at("x1").get<double>();
  c.x2 = j.at("x2").get<double>();
  c.w1 = j.at("w1").get<double>();
  c.w2 = j.at("w2").get<double>();
  c.clamped = j.at("clamped").get<bool>();
  c.n_rows = j.at("n_rows").get<size_t>();
  c.n_pairs = j.at("n_pairs").get<size_t>();
  c.diagnostic = j.at("diagnostic").get<std::string>();
  return c;
}

}  // namespace

CalibrationReport calibrate(std::span<const SectionTraversal> calibration,
                            const BoostedForest& forest, const Route& route,
                            std::span<const SectionTraversal> probe_pool,
                            double window_s) {
  if (probe_pool.empty()) probe_pool = calibration;
  CalibrationReport report;
  report.ns = calibrate_class(SpatialClass::NS, calibration, forest, route,
                              probe_pool, window_s);
  report.sis = calibrate_class(SpatialClass::SIS, calibration, forest, route,
                               probe_pool, window_s);
  return report;
}

std::string serialize_report(const CalibrationReport& report) {
  json doc{{"format_version", 1},
           {"split_note", report.split_note},
           {"NS", class_to_json(report.ns)},
           {"SIS", class_to_json(report.sis)}};
  return doc.dump(2) + "\n";
}

CalibrationReport parse_report(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw CalibrationError(std::string("malformed calibration report: ") +
                           e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != 1)
      throw CalibrationError("unsupported calibration report version");
    CalibrationReport report;
    report.split_note = doc.at("split_note").get<std::string>();
    report.ns = class_from_json(doc.at("NS"));
    report.sis = class_from_json(doc.at("SIS"));
    return report;
  } catch (const json::exception& e) {
    throw CalibrationError(std::string("malformed calibration report: ") +
                           e.what());
  }
}

}  // namespace bte
