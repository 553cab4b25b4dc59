#include "trajraster/geo.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.h"

using namespace trajraster;
using namespace trajraster::geo;

TEST(Projection, OriginMapsToOrigin) {
    const ProjCoord p = project_forward({0.0, 0.0});
    EXPECT_EQ(p.x, 0.0);
    EXPECT_EQ(p.y, 0.0);
    const GeoCoord g = project_inverse({0.0, 0.0});
    EXPECT_EQ(g.lat, 0.0);
    EXPECT_EQ(g.lon, 0.0);
}

TEST(Projection, Antimeridian) {
    // pi * 6378137 evaluated independently.
    const double half_world = 20037508.342789244;
    const ProjCoord p = project_forward({0.0, 180.0});
    EXPECT_NEAR(p.x, half_world, 1e-6);
    EXPECT_NEAR(p.y, 0.0, 1e-6);

    const GeoCoord g = project_inverse({20037508.3427892, 0.0});
    EXPECT_NEAR(g.lon, 180.0, 1e-9);
    EXPECT_NEAR(g.lat, 0.0, 1e-9);
}

TEST(Projection, MontrealAgainstDirectFormula) {
    const auto expected = oracle::mercator(45.5, -73.5);
    ASSERT_TRUE(expected);
    const ProjCoord p = project_forward({45.5, -73.5});
    EXPECT_NEAR(p.x, expected->x, 1e-6);
    EXPECT_NEAR(p.y, expected->y, 1e-6);
}

TEST(Projection, GuardBand) {
    EXPECT_THROW(project_forward({85.06, 0.0}), ProjectionError);
    EXPECT_THROW(project_forward({-89.0, 0.0}), ProjectionError);
    EXPECT_THROW(project_forward({std::nan(""), 0.0}), ProjectionError);
    EXPECT_NO_THROW(project_forward({85.05, 0.0}));
    EXPECT_FALSE(in_projection_band({0.0, 180.5}));
}

TEST(Projection, RoundTripAndMonotonic) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lat(-85.0, 85.0);
    std::uniform_real_distribution<double> lon(-180.0, 180.0);
    for (int i = 0; i < 10000; ++i) {
        const GeoCoord g{lat(rng), lon(rng)};
        const GeoCoord back = project_inverse(project_forward(g));
        ASSERT_NEAR(back.lat, g.lat, 1e-9);
        ASSERT_NEAR(back.lon, g.lon, 1e-9);

        const GeoCoord h{std::min(g.lat + 0.001, 85.0), std::min(g.lon + 0.001, 180.0)};
        const ProjCoord pg = project_forward(g);
        const ProjCoord ph = project_forward(h);
        if (h.lat > g.lat) {
            EXPECT_GT(ph.y, pg.y);
        }
        if (h.lon > g.lon) {
            EXPECT_GT(ph.x, pg.x);
        }
    }
}

TEST(Haversine, Examples) {
    EXPECT_EQ(geodesic_distance({45.5, -73.5}, {45.5, -73.5}), 0.0);
    // 1 degree of arc on the mean-radius sphere.
    EXPECT_NEAR(geodesic_distance({0, 0}, {0, 1}), 6371008.8 * oracle::kPi / 180.0, 1e-6);
    EXPECT_NEAR(geodesic_distance({0, 0}, {0, 180}), oracle::kPi * 6371008.8, 1e-6);
    EXPECT_NEAR(geodesic_distance({0, 0}, {1, 0}), 6371008.8 * oracle::kPi / 180.0, 1e-6);
}

TEST(Haversine, MetricProperties) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> lat(-89.0, 89.0);
    std::uniform_real_distribution<double> lon(-180.0, 180.0);
    for (int i = 0; i < 5000; ++i) {
        const GeoCoord a{lat(rng), lon(rng)};
        const GeoCoord b{lat(rng), lon(rng)};
        const GeoCoord c{lat(rng), lon(rng)};
        const double ab = geodesic_distance(a, b);
        EXPECT_EQ(ab, geodesic_distance(b, a));
        EXPECT_GT(ab, 0.0);
        EXPECT_LE(geodesic_distance(a, c), ab + geodesic_distance(b, c) + 1e-6);
    }
}
