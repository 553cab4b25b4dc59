#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check (no kernels, no bin_point, no AggCell).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "trajraster/grid.h"
#include "trajraster/ingest.h"

namespace trajraster::oracle {

inline constexpr double kPi = std::numbers::pi;

/// Mercator via y = R*asinh(tan(lat)), algebraically equal to the
/// ln(tan(pi/4 + lat/2)) form but evaluated differently.
struct XY {
    double x;
    double y;
};

inline std::optional<XY> mercator(double lat_deg, double lon_deg) {
    if (!(std::abs(lat_deg) < 85.06) || !(std::abs(lon_deg) <= 180.0)) return std::nullopt;
    const long double r = 6378137.0L;
    const long double lam = static_cast<long double>(lon_deg) * std::numbers::pi_v<long double> / 180.0L;
    const long double phi = static_cast<long double>(lat_deg) * std::numbers::pi_v<long double> / 180.0L;
    return XY{static_cast<double>(r * lam), static_cast<double>(r * std::asinh(std::tan(phi)))};
}

struct CellStats {
    std::int64_t count = 0;
    std::int64_t valid = 0;
    long double sum = 0.0L;
    double max = 0.0;
};

/// Expected bands computed cell by cell with a full linear scan of the points.
struct BruteRaster {
    std::int64_t n_rows = 0;
    std::int64_t n_cols = 0;
    std::vector<std::int64_t> count;
    std::vector<double> mean;  // kNodata where no valid speed
    std::vector<double> max;
};

inline BruteRaster brute_force(std::span<const TrajectoryPoint> points, const GridSpec& spec) {
    std::vector<std::optional<XY>> xy;
    xy.reserve(points.size());
    for (const auto& p : points) xy.push_back(mercator(p.fix.coord.lat, p.fix.coord.lon));

    BruteRaster out;
    out.n_rows = spec.n_rows;
    out.n_cols = spec.n_cols;
    for (std::int64_t r = 0; r < spec.n_rows; ++r) {
        const double top = spec.origin_y - static_cast<double>(r) * spec.pixel_size;
        const double bottom = spec.origin_y - static_cast<double>(r + 1) * spec.pixel_size;
        for (std::int64_t c = 0; c < spec.n_cols; ++c) {
            const double left = spec.origin_x + static_cast<double>(c) * spec.pixel_size;
            const double right = spec.origin_x + static_cast<double>(c + 1) * spec.pixel_size;
            CellStats s;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (!xy[i]) continue;
                const auto [x, y] = *xy[i];
                if (!(left <= x && x < right && bottom < y && y <= top)) continue;
                ++s.count;
                const double v = points[i].speed;
                if (v == kNodata) continue;
                if (s.valid == 0 || v > s.max) s.max = v;
                ++s.valid;
                s.sum += v;
            }
            out.count.push_back(s.count);
            out.mean.push_back(s.valid > 0 ? static_cast<double>(s.sum / s.valid) : kNodata);
            out.max.push_back(s.valid > 0 ? s.max : kNodata);
        }
    }
    return out;
}

/// Random fixes scattered over `spec` (plus a margin outside it), with a
/// share of nodata speeds.
inline std::vector<TrajectoryPoint> random_points(std::size_t n, const GridSpec& spec,
                                                  std::uint64_t seed, double outside_margin = 0.1,
                                                  double nodata_share = 0.1) {
    std::mt19937_64 rng(seed);
    const double w = spec.pixel_size * static_cast<double>(spec.n_cols);
    const double h = spec.pixel_size * static_cast<double>(spec.n_rows);
    std::uniform_real_distribution<double> ux(spec.origin_x - outside_margin * w,
                                              spec.origin_x + (1.0 + outside_margin) * w);
    std::uniform_real_distribution<double> uy(spec.origin_y - (1.0 + outside_margin) * h,
                                              spec.origin_y + outside_margin * h);
    std::uniform_real_distribution<double> speed(0.0, 40.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<TrajectoryPoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        // Inverse Mercator, written independently of geo::project_inverse.
        const double lon = x / 6378137.0 * 180.0 / kPi;
        const double lat = std::atan(std::sinh(y / 6378137.0)) * 180.0 / kPi;
        TrajectoryPoint p;
        p.fix.trajectory_id = "r" + std::to_string(i % 17);
        p.fix.timestamp = 1464800000.0 + static_cast<double>(i);
        p.fix.coord = {lat, lon};
        p.speed = unit(rng) < nodata_share ? kNodata : speed(rng);
        pts.push_back(std::move(p));
    }
    return pts;
}

/// Projected Montreal-area grid used by several tests.
inline GridSpec montreal_grid(std::int64_t cols, std::int64_t rows, double px = 5.0) {
    return GridSpec{-8195500.0, 5707500.0, px, cols, rows};
}

/// Random raster with arbitrary doubles (including tiny and huge magnitudes)
/// and nodata holes, for I/O round trips.
inline AggregateRaster random_raster(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::int64_t> dim(1, 40);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> exponent(-30, 30);
    std::uniform_int_distribution<std::int64_t> count(0, 1'000'000);

    AggregateRaster r;
    const double px = 0.25 + 100.0 * unit(rng);
    r.spec = GridSpec{-2e7 * unit(rng), 2e7 * unit(rng), px, dim(rng), dim(rng)};
    r.count_band = Matrix<std::int64_t>(r.spec.n_rows, r.spec.n_cols, 0);
    r.mean_speed_band = Matrix<double>(r.spec.n_rows, r.spec.n_cols, kNodata);
    r.max_speed_band = Matrix<double>(r.spec.n_rows, r.spec.n_cols, kNodata);
    for (std::size_t i = 0; i < r.count_band.values.size(); ++i) {
        if (unit(rng) < 0.3) continue;
        r.count_band.values[i] = count(rng);
        const double mean = unit(rng) * std::ldexp(1.0, exponent(rng));
        r.mean_speed_band.values[i] = mean;
        r.max_speed_band.values[i] = mean + unit(rng);
    }
    return r;
}

inline bool rel_close(double a, double b, double rel) {
    if (a == b) return true;
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace trajraster::oracle
