#pragma once

// Grid geometry, point-to-cell binning and the per-cell aggregation monoid.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace trajraster {

/// Sentinel for real-valued bands and for "no speed" on a fix.
inline constexpr double kNodata = -9999.0;

/// North-up structured grid. origin_y is the TOP edge; rows grow southward.
///
/// Covered extent is [origin_x, origin_x + n_cols*px) x (origin_y - n_rows*px, origin_y].
struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size = 1.0;
    std::int64_t n_cols = 1;
    std::int64_t n_rows = 1;

    bool valid() const noexcept;
    /// Throws std::invalid_argument when !valid().
    void validate() const;

    std::int64_t cell_count() const noexcept { return n_cols * n_rows; }

    // Cell edges. These are the canonical boundaries: binning and the
    // vector-grid boxes both use exactly these expressions.
    double col_left(std::int64_t col) const noexcept {
        return origin_x + static_cast<double>(col) * pixel_size;
    }
    double row_top(std::int64_t row) const noexcept {
        return origin_y - static_cast<double>(row) * pixel_size;
    }

    double min_x() const noexcept { return col_left(0); }
    double max_x() const noexcept { return col_left(n_cols); }
    double max_y() const noexcept { return row_top(0); }
    double min_y() const noexcept { return row_top(n_rows); }

    bool operator==(const GridSpec&) const = default;
};

struct CellIndex {
    std::int64_t row = 0;
    std::int64_t col = 0;

    bool operator==(const CellIndex&) const = default;
    auto operator<=>(const CellIndex&) const = default;
};

struct CellIndexHash {
    std::size_t operator()(const CellIndex& c) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(c.row) * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(c.col) + 0x7F4A7C15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

/// Maps a projected point to its cell. Half-open: top/left edges inclusive,
/// bottom/right exclusive. Returns nullopt for points outside the grid or
/// non-finite coordinates.
std::optional<CellIndex> bin_point(double x, double y, const GridSpec& spec) noexcept;

/// Row-major linear index, -1 when out of bounds. Same rule as bin_point.
std::int64_t bin_point_linear(double x, double y, const GridSpec& spec) noexcept;

/// Per-cell partial aggregate. Forms a commutative monoid under agg_merge.
///
/// `count` counts every fix; `valid` counts only fixes with a speed. The
/// speed sum is kept as an unevaluated pair (hi + lo) so that merges in any
/// order round to the same double.
struct AggCell {
    std::uint64_t count = 0;
    std::uint64_t valid = 0;
    double sum_hi = 0.0;
    double sum_lo = 0.0;
    double max = -std::numeric_limits<double>::infinity();

    double speed_sum() const noexcept { return sum_hi + sum_lo; }
    std::optional<double> speed_max() const noexcept {
        if (valid == 0) return std::nullopt;
        return max;
    }
    std::optional<double> speed_mean() const noexcept {
        if (valid == 0) return std::nullopt;
        return speed_sum() / static_cast<double>(valid);
    }

    bool operator==(const AggCell&) const = default;
};

AggCell agg_identity() noexcept;

/// Adds one fix. `speed` is a finite value >= 0 or kNodata; anything else
/// throws std::invalid_argument.
AggCell agg_insert(AggCell cell, double speed);

/// In-place variant used on hot paths; same contract as agg_insert.
void agg_insert_into(AggCell& cell, double speed);

AggCell agg_merge(const AggCell& a, const AggCell& b) noexcept;

using CellMap = std::unordered_map<CellIndex, AggCell, CellIndexHash>;

/// Merges every entry of `from` into `into`.
void merge_into(CellMap& into, const CellMap& from);

/// One occupied cell, keyed by its row-major linear index.
struct CellEntry {
    std::int64_t cell = 0;
    AggCell agg;

    bool operator==(const CellEntry&) const = default;
};

/// Flat sparse aggregate: entries sorted by strictly increasing cell.
using SortedCells = std::vector<CellEntry>;

/// Union of two sorted aggregates; shared cells become agg_merge(a, b).
SortedCells merge_sorted(const SortedCells& a, const SortedCells& b);

/// Dense row-major matrix.
template <typename T>
struct Matrix {
    std::int64_t n_rows = 0;
    std::int64_t n_cols = 0;
    std::vector<T> values;

    Matrix() = default;
    Matrix(std::int64_t rows, std::int64_t cols, T fill)
        : n_rows(rows), n_cols(cols), values(static_cast<std::size_t>(rows * cols), fill) {}

    T& at(std::int64_t row, std::int64_t col) {
        return values[static_cast<std::size_t>(row * n_cols + col)];
    }
    const T& at(std::int64_t row, std::int64_t col) const {
        return values[static_cast<std::size_t>(row * n_cols + col)];
    }

    bool operator==(const Matrix&) const = default;
};

struct AggregateRaster {
    GridSpec spec;
    Matrix<std::int64_t> count_band;
    Matrix<double> mean_speed_band;
    Matrix<double> max_speed_band;
    double nodata = kNodata;
};

/// Densifies a sparse aggregate. Mean and max are nodata where a cell has no
/// valid speed. Throws std::out_of_range on a key outside the grid.
AggregateRaster finalize(const CellMap& cells, const GridSpec& spec);

/// Same as above for a sorted aggregate; also throws std::invalid_argument
/// if the entries are not strictly increasing.
AggregateRaster finalize(std::span<const CellEntry> cells, const GridSpec& spec);

}  // namespace trajraster
