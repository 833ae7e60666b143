// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace bte {

// Great-circle distance in meters between two WGS84 points.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Destination point after moving `distance_m` along `bearing_deg` (clockwise
// from north) on the sphere. Used to synthesize stop coordinates.
void destination_point(double lat, double lon, double bearing_deg,
                       double distance_m, double& out_lat, double& out_lon);

}  // namespace bte
