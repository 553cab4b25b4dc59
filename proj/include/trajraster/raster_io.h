#pragma once

// ESRI ASCII grid output/input and band differencing.
//
// Layout written:
//   ncols <n>
//   nrows <n>
//   xllcorner <origin_x>
//   yllcorner <origin_y - n_rows * pixel_size>
//   cellsize <pixel_size>
//   NODATA_value -9999
// then n_rows lines of space-separated values, top row first, LF endings.
// Reals use the shortest decimal form that round-trips.

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "trajraster/grid.h"
#include "trajraster/kernels.h"

namespace trajraster {

enum class Band { kCount, kMean, kMax };

/// File suffix for a band: "_count", "_speed_avg", "_speed_max".
std::string_view band_suffix(Band band) noexcept;

class RasterFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AsciiGridHeader {
    std::int64_t n_cols = 0;
    std::int64_t n_rows = 0;
    double xll = 0.0;
    double yll = 0.0;
    double cell_size = 0.0;
    double nodata = kNodata;

    /// Recovers the top-left origin.
    GridSpec to_grid_spec() const;
};

struct AsciiGrid {
    AsciiGridHeader header;
    Matrix<double> values;
};

/// Throws std::runtime_error if the sink goes bad.
void write_ascii_grid(const AggregateRaster& raster, Band band, std::ostream& sink);

/// Throws RasterFormatError on a malformed header or a value-count mismatch.
AsciiGrid read_ascii_grid(std::istream& source);

/// Band as a real matrix (count converted to double).
Matrix<double> band_matrix(const AggregateRaster& raster, Band band);

using DiffReport = kernels::DiffReport;

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Cell-wise comparison; nodata equals nodata, nodata vs value is a
/// difference of +inf. Throws DimensionMismatch.
DiffReport raster_diff(const Matrix<double>& a, const Matrix<double>& b, double nodata = kNodata);

}  // namespace trajraster
