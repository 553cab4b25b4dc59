#pragma once

// Shared scalar expressions for the projection. Both kernel variants and
// geo::project_forward go through these so the results agree bit for bit.

#include <cmath>

#include "trajraster/geo.h"

namespace trajraster::detail {
namespace {

inline double mercator_x(double lon_deg) noexcept {
    return geo::kMercatorRadius * (lon_deg * geo::kDegToRad);
}

inline double mercator_y(double lat_deg) noexcept {
    // atanh(sin(phi)) equals ln(tan(pi/4 + phi/2)) and maps the equator to 0 exactly.
    return geo::kMercatorRadius * std::atanh(std::sin(lat_deg * geo::kDegToRad));
}

inline bool projectable(double lat_deg, double lon_deg) noexcept {
    return std::abs(lat_deg) < geo::kMaxMercatorLatitude && std::abs(lon_deg) <= 180.0;
}

}  // namespace
}  // namespace trajraster::detail
