#pragma once

// WGS84 -> spherical pseudo-Mercator, and great-circle distance.

#include <numbers>
#include <stdexcept>

namespace trajraster::geo {

inline constexpr double kMercatorRadius = 6378137.0;
inline constexpr double kMeanEarthRadius = 6371008.8;
/// Projection is refused at or beyond this latitude.
inline constexpr double kMaxMercatorLatitude = 85.06;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct GeoCoord {
    double lat = 0.0;  // degrees
    double lon = 0.0;  // degrees

    bool operator==(const GeoCoord&) const = default;
};

struct ProjCoord {
    double x = 0.0;  // easting, m
    double y = 0.0;  // northing, m

    bool operator==(const ProjCoord&) const = default;
};

class ProjectionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

bool is_valid(const GeoCoord& g) noexcept;
bool in_projection_band(const GeoCoord& g) noexcept;

/// x = R*lon, y = R*ln(tan(pi/4 + lat/2)). Throws ProjectionError outside
/// the guard band or for invalid coordinates.
ProjCoord project_forward(const GeoCoord& g);

ProjCoord project_forward_unchecked(const GeoCoord& g) noexcept;

GeoCoord project_inverse(const ProjCoord& p) noexcept;

/// Haversine distance on the mean-radius sphere, metres.
double geodesic_distance(const GeoCoord& a, const GeoCoord& b) noexcept;

}  // namespace trajraster::geo
