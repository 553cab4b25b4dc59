#include "trajraster/raster_io.h"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "text.h"

namespace trajraster {

std::string_view band_suffix(Band band) noexcept {
    switch (band) {
        case Band::kMean:
            return "_speed_avg";
        case Band::kMax:
            return "_speed_max";
        case Band::kCount:
            break;
    }
    return "_count";
}

GridSpec AsciiGridHeader::to_grid_spec() const {
    return GridSpec{xll, yll + static_cast<double>(n_rows) * cell_size, cell_size, n_cols, n_rows};
}

void write_ascii_grid(const AggregateRaster& raster, Band band, std::ostream& sink) {
    const GridSpec& spec = raster.spec;
    std::string out;
    out += "ncols ";
    text::append_int(out, spec.n_cols);
    out += "\nnrows ";
    text::append_int(out, spec.n_rows);
    out += "\nxllcorner ";
    text::append_double(out, spec.origin_x);
    out += "\nyllcorner ";
    text::append_double(out, spec.min_y());
    out += "\ncellsize ";
    text::append_double(out, spec.pixel_size);
    out += "\nNODATA_value ";
    text::append_double(out, raster.nodata);
    out += '\n';
    sink << out;

    for (std::int64_t row = 0; row < spec.n_rows; ++row) {
        out.clear();
        for (std::int64_t col = 0; col < spec.n_cols; ++col) {
            if (col > 0) out += ' ';
            switch (band) {
                case Band::kCount:
                    text::append_int(out, raster.count_band.at(row, col));
                    break;
                case Band::kMean:
                    text::append_double(out, raster.mean_speed_band.at(row, col));
                    break;
                case Band::kMax:
                    text::append_double(out, raster.max_speed_band.at(row, col));
                    break;
            }
        }
        out += '\n';
        sink << out;
    }
    if (!sink) throw std::runtime_error("failed writing ASCII grid");
}

namespace {

bool next_token(std::istream& in, std::string& token) {
    return static_cast<bool>(in >> token);
}

}  // namespace

AsciiGrid read_ascii_grid(std::istream& source) {
    AsciiGrid grid;
    AsciiGridHeader& h = grid.header;
    std::optional<std::int64_t> ncols;
    std::optional<std::int64_t> nrows;
    std::optional<double> xll;
    std::optional<double> yll;
    std::optional<double> cell;
    std::optional<double> nodata;

    std::string key;
    std::string value;
    std::string pending;  // first value token if NODATA_value is absent
    while (next_token(source, key)) {
        const std::string k = text::lower(key);
        double number = 0.0;
        if (k == "ncols" || k == "nrows") {
            std::int64_t n = 0;
            if (!next_token(source, value) || !text::parse_int(value, n) || n < 1) {
                throw RasterFormatError("bad value for " + key);
            }
            (k == "ncols" ? ncols : nrows) = n;
        } else if (k == "xllcorner" || k == "yllcorner" || k == "cellsize" || k == "nodata_value") {
            if (!next_token(source, value) || !text::parse_double(value, number)) {
                throw RasterFormatError("bad value for " + key);
            }
            if (k == "xllcorner") xll = number;
            else if (k == "yllcorner") yll = number;
            else if (k == "cellsize") cell = number;
            else nodata = number;
        } else {
            pending = key;
            break;
        }
        if (ncols && nrows && xll && yll && cell && nodata) break;
    }
    if (!ncols || !nrows || !xll || !yll || !cell) {
        throw RasterFormatError("incomplete ASCII grid header");
    }
    if (!(*cell > 0.0)) throw RasterFormatError("cellsize must be positive");

    h.n_cols = *ncols;
    h.n_rows = *nrows;
    h.xll = *xll;
    h.yll = *yll;
    h.cell_size = *cell;
    h.nodata = nodata.value_or(kNodata);

    const std::int64_t expected = h.n_cols * h.n_rows;
    grid.values.n_rows = h.n_rows;
    grid.values.n_cols = h.n_cols;
    grid.values.values.reserve(static_cast<std::size_t>(expected));
    auto push = [&](const std::string& token) {
        double v = 0.0;
        if (!text::parse_double(token, v)) throw RasterFormatError("bad cell value '" + token + "'");
        if (static_cast<std::int64_t>(grid.values.values.size()) >= expected) {
            throw RasterFormatError("more values than ncols*nrows");
        }
        grid.values.values.push_back(v);
    };
    if (!pending.empty()) push(pending);
    while (next_token(source, value)) push(value);
    if (static_cast<std::int64_t>(grid.values.values.size()) != expected) {
        throw RasterFormatError("expected " + std::to_string(expected) + " values, found " +
                                std::to_string(grid.values.values.size()));
    }
    return grid;
}

Matrix<double> band_matrix(const AggregateRaster& raster, Band band) {
    switch (band) {
        case Band::kMean:
            return raster.mean_speed_band;
        case Band::kMax:
            return raster.max_speed_band;
        case Band::kCount:
            break;
    }
    Matrix<double> m(raster.count_band.n_rows, raster.count_band.n_cols, 0.0);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        m.values[i] = static_cast<double>(raster.count_band.values[i]);
    }
    return m;
}

DiffReport raster_diff(const Matrix<double>& a, const Matrix<double>& b, double nodata) {
    if (a.n_rows != b.n_rows || a.n_cols != b.n_cols) {
        throw DimensionMismatch("raster dimensions differ: " + std::to_string(a.n_cols) + "x" +
                                std::to_string(a.n_rows) + " vs " + std::to_string(b.n_cols) +
                                "x" + std::to_string(b.n_rows));
    }
    return kernels::diff_bands(a.values, b.values, nodata);
}

}  // namespace trajraster
