// SPDX-License-Identifier: Apache-2.0
#include "bte/geo.hpp"

#include <cmath>

namespace bte {

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = M_PI / 180.0;
}  // namespace

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  double phi1 = lat1 * kDegToRad;
  double phi2 = lat2 * kDegToRad;
  double dphi = (lat2 - lat1) * kDegToRad;
  double dlam = (lon2 - lon1) * kDegToRad;
  double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
             std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) *
                 std::sin(dlam / 2);
  return kEarthRadiusM * 2.0 * std::asin(std::min(1.0, std::sqrt(a)));
}

void destination_point(double lat, double lon, double bearing_deg,
                       double distance_m, double& out_lat, double& out_lon) {
  double phi = lat * kDegToRad;
  double lam = lon * kDegToRad;
  double theta = bearing_deg * kDegToRad;
  double delta = distance_m / kEarthRadiusM;
  double phi2 = std::asin(std::sin(phi) * std::cos(delta) +
                          std::cos(phi) * std::sin(delta) * std::cos(theta));
  double lam2 =
      lam + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi),
                       std::cos(delta) - std::sin(phi) * std::sin(phi2));
  out_lat = phi2 / kDegToRad;
  out_lon = lam2 / kDegToRad;
}

}  // namespace bte
