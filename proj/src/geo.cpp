#include "trajraster/geo.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mercator.h"

namespace trajraster::geo {

bool is_valid(const GeoCoord& g) noexcept {
    return std::isfinite(g.lat) && std::isfinite(g.lon) && g.lat >= -90.0 && g.lat <= 90.0 &&
           g.lon >= -180.0 && g.lon <= 180.0;
}

bool in_projection_band(const GeoCoord& g) noexcept {
    return detail::projectable(g.lat, g.lon);
}

ProjCoord project_forward(const GeoCoord& g) {
    if (!in_projection_band(g)) {
        throw ProjectionError("coordinate (" + std::to_string(g.lat) + ", " +
                              std::to_string(g.lon) + ") is outside the projection band");
    }
    return project_forward_unchecked(g);
}

ProjCoord project_forward_unchecked(const GeoCoord& g) noexcept {
    return {detail::mercator_x(g.lon), detail::mercator_y(g.lat)};
}

GeoCoord project_inverse(const ProjCoord& p) noexcept {
    const double lon = (p.x / kMercatorRadius) * kRadToDeg;
    const double lat = (2.0 * std::atan(std::exp(p.y / kMercatorRadius)) - std::numbers::pi / 2.0) *
                       kRadToDeg;
    return {lat, lon};
}

double geodesic_distance(const GeoCoord& a, const GeoCoord& b) noexcept {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlambda = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::min(1.0, std::max(0.0, h));
    return 2.0 * kMeanEarthRadius * std::asin(std::sqrt(h));
}

}  // namespace trajraster::geo
