#include "trajraster/raster_io.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.h"

using namespace trajraster;

namespace {

AggregateRaster one_cell() {
    AggregateRaster r;
    r.spec = GridSpec{0.0, 5.0, 5.0, 1, 1};
    r.count_band = Matrix<std::int64_t>(1, 1, 3);
    r.mean_speed_band = Matrix<double>(1, 1, 2.5);
    r.max_speed_band = Matrix<double>(1, 1, 4.0);
    return r;
}

std::string write(const AggregateRaster& r, Band band) {
    std::ostringstream out;
    write_ascii_grid(r, band, out);
    return out.str();
}

}  // namespace

TEST(AsciiGrid, GoldenOneByOne) {
    EXPECT_EQ(write(one_cell(), Band::kCount),
              "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 5\nNODATA_value -9999\n3\n");
    EXPECT_EQ(write(one_cell(), Band::kMean),
              "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 5\nNODATA_value -9999\n2.5\n");
}

TEST(AsciiGrid, EmptyMeanBand) {
    AggregateRaster r;
    r.spec = GridSpec{100.0, 200.0, 10.0, 2, 2};
    r.count_band = Matrix<std::int64_t>(2, 2, 0);
    r.mean_speed_band = Matrix<double>(2, 2, kNodata);
    r.max_speed_band = Matrix<double>(2, 2, kNodata);
    EXPECT_EQ(write(r, Band::kMean),
              "ncols 2\nnrows 2\nxllcorner 100\nyllcorner 180\ncellsize 10\nNODATA_value -9999\n"
              "-9999 -9999\n-9999 -9999\n");
}

TEST(AsciiGrid, BandSuffixes) {
    EXPECT_EQ(band_suffix(Band::kCount), "_count");
    EXPECT_EQ(band_suffix(Band::kMean), "_speed_avg");
    EXPECT_EQ(band_suffix(Band::kMax), "_speed_max");
}

TEST(AsciiGrid, RoundTripIsExact) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const AggregateRaster r = oracle::random_raster(rng);
        for (const Band band : {Band::kCount, Band::kMean, Band::kMax}) {
            std::istringstream in(write(r, band));
            const AsciiGrid g = read_ascii_grid(in);
            ASSERT_EQ(g.values, band_matrix(r, band));
            EXPECT_EQ(g.header.n_cols, r.spec.n_cols);
            EXPECT_EQ(g.header.n_rows, r.spec.n_rows);
            EXPECT_EQ(g.header.cell_size, r.spec.pixel_size);
            EXPECT_EQ(g.header.xll, r.spec.origin_x);
            EXPECT_EQ(g.header.nodata, kNodata);
            EXPECT_DOUBLE_EQ(g.header.to_grid_spec().origin_y, r.spec.origin_y);
        }
    }
}

TEST(AsciiGrid, ReaderAcceptsLooseHeaders) {
    std::istringstream in("NCOLS 2\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\n1.5 2\n");
    const AsciiGrid g = read_ascii_grid(in);
    EXPECT_EQ(g.values.values, (std::vector<double>{1.5, 2.0}));
    EXPECT_EQ(g.header.nodata, kNodata);
}

TEST(AsciiGrid, MalformedInput) {
    const char* bad[] = {
        "",
        "ncols 1\nnrows 1\n",
        "ncols x\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1\n",
        "ncols 0\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n",
        "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2 3\n",
        "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n",
        "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\nabc\n",
    };
    for (const char* text : bad) {
        std::istringstream in(text);
        EXPECT_THROW(read_ascii_grid(in), RasterFormatError) << text;
    }
}

TEST(RasterDiff, Examples) {
    Matrix<double> a(2, 3, 1.0);
    a.at(1, 2) = kNodata;
    EXPECT_EQ(raster_diff(a, a), (DiffReport{0, 0.0}));

    Matrix<double> b = a;
    b.at(0, 1) = 3.5;
    EXPECT_EQ(raster_diff(a, b), (DiffReport{1, 2.5}));
    EXPECT_EQ(raster_diff(b, a), (DiffReport{1, 2.5}));

    Matrix<double> c(2, 3, 0.0);
    Matrix<double> d = c;
    d.at(0, 0) = kNodata;
    const DiffReport r = raster_diff(c, d);
    EXPECT_EQ(r.n_differing_cells, 1);
    EXPECT_EQ(r.max_abs_diff, std::numeric_limits<double>::infinity());

    EXPECT_THROW(raster_diff(a, Matrix<double>(3, 2, 1.0)), DimensionMismatch);
}

TEST(RasterDiff, SymmetricAndZeroOnSelf) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const AggregateRaster r = oracle::random_raster(rng);
        const Matrix<double> a = band_matrix(r, Band::kMean);
        Matrix<double> b = a;
        for (std::size_t i = 0; i < b.values.size(); i += 3) b.values[i] += 1.0;
        EXPECT_EQ(raster_diff(a, a).n_differing_cells, 0);
        EXPECT_EQ(raster_diff(a, b), raster_diff(b, a));
    }
}
