// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "bte/avl_ingest.hpp"
#include "bte/boosted_trees.hpp"
#include "bte/route_model.hpp"

namespace bte {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coefficient of determination of `predicted` against `actual`.
double r_squared(std::span<const double> actual,
                 std::span<const double> predicted);

// Pearson product-moment correlation.
double pearson_correlation(std::span<const double> a,
                           std::span<const double> b);

// Fusion weights w1 = x1/(x1+x2), w2 = x2/(x1+x2). Requires x1, x2 > 0.
std::pair<double, double> compute_weights(double x1, double x2);

struct ClassCalibration {
  bool present = false;
  double x1 = 0, x2 = 0, w1 = 1, w2 = 0;
  bool clamped = false;  // x2 <= 0 forced (w1, w2) = (1, 0)
  size_t n_rows = 0;     // rows behind x1
  size_t n_pairs = 0;    // (current, preceding) pairs behind x2
  std::string diagnostic;
};

struct CalibrationReport {
  ClassCalibration ns;
  ClassCalibration sis;
  std::string split_note;

  const ClassCalibration& for_class(SpatialClass c) const {
    return c == SpatialClass::SIS ? sis : ns;
  }
};

// Per spatial class: x1 = R-squared of the forest on the calibration rows,
// x2 = correlation between each traversal and its nearest preceding traversal
// of the same section within `window_s`, pooled across sections. Probes are
// drawn from `probe_pool` (typically train + calibration traversals) when
// given, else from the calibration split itself.
CalibrationReport calibrate(std::span<const SectionTraversal> calibration,
                            const BoostedForest& forest, const Route& route,
                            std::span<const SectionTraversal> probe_pool = {},
                            double window_s = 1800.0);

std::string serialize_report(const CalibrationReport& report);
CalibrationReport parse_report(const std::string& text);

}  // namespace bte
