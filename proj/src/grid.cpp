#include "trajraster/grid.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "trajraster/kernels.h"

namespace trajraster {

bool GridSpec::valid() const noexcept {
    return std::isfinite(origin_x) && std::isfinite(origin_y) && std::isfinite(pixel_size) &&
           pixel_size > 0.0 && n_cols >= 1 && n_rows >= 1;
}

void GridSpec::validate() const {
    if (!valid()) {
        throw std::invalid_argument("invalid grid: pixel_size=" + std::to_string(pixel_size) +
                                    " n_cols=" + std::to_string(n_cols) +
                                    " n_rows=" + std::to_string(n_rows));
    }
}

std::int64_t bin_point_linear(double x, double y, const GridSpec& spec) noexcept {
    const double px = spec.pixel_size;
    double col = std::floor((x - spec.origin_x) / px);
    double row = std::floor((spec.origin_y - y) / px);

    // The quotient can round across an edge; snap to the edges as computed
    // by col_left/row_top.
    if (x < spec.origin_x + col * px) {
        col -= 1.0;
    } else if (x >= spec.origin_x + (col + 1.0) * px) {
        col += 1.0;
    }
    if (y > spec.origin_y - row * px) {
        row -= 1.0;
    } else if (y <= spec.origin_y - (row + 1.0) * px) {
        row += 1.0;
    }

    if (!(col >= 0.0 && col < static_cast<double>(spec.n_cols) && row >= 0.0 &&
          row < static_cast<double>(spec.n_rows))) {
        return -1;
    }
    return static_cast<std::int64_t>(row) * spec.n_cols + static_cast<std::int64_t>(col);
}

std::optional<CellIndex> bin_point(double x, double y, const GridSpec& spec) noexcept {
    const std::int64_t linear = bin_point_linear(x, y, spec);
    if (linear < 0) return std::nullopt;
    return CellIndex{linear / spec.n_cols, linear % spec.n_cols};
}

AggCell agg_identity() noexcept { return AggCell{}; }

void agg_insert_into(AggCell& cell, double speed) {
    if (speed == kNodata) {
        ++cell.count;
        return;
    }
    if (!std::isfinite(speed) || speed < 0.0) {
        throw std::invalid_argument("speed must be finite and >= 0, got " + std::to_string(speed));
    }
    ++cell.count;
    ++cell.valid;
    // TwoSum: hi + err == old_hi + speed exactly.
    const double s = cell.sum_hi + speed;
    const double bp = s - cell.sum_hi;
    const double err = (cell.sum_hi - (s - bp)) + (speed - bp);
    cell.sum_hi = s;
    cell.sum_lo += err;
    if (speed > cell.max) cell.max = speed;
}

AggCell agg_insert(AggCell cell, double speed) {
    agg_insert_into(cell, speed);
    return cell;
}

AggCell agg_merge(const AggCell& a, const AggCell& b) noexcept {
    AggCell out;
    out.count = a.count + b.count;
    out.valid = a.valid + b.valid;
    const double s = a.sum_hi + b.sum_hi;
    const double bp = s - a.sum_hi;
    const double err = (a.sum_hi - (s - bp)) + (b.sum_hi - bp);
    out.sum_hi = s;
    out.sum_lo = (a.sum_lo + b.sum_lo) + err;
    out.max = a.max < b.max ? b.max : a.max;
    return out;
}

void merge_into(CellMap& into, const CellMap& from) {
    for (const auto& [cell, agg] : from) {
        auto [it, inserted] = into.try_emplace(cell, agg);
        if (!inserted) it->second = agg_merge(it->second, agg);
    }
}

SortedCells merge_sorted(const SortedCells& a, const SortedCells& b) {
    SortedCells out;
    out.reserve(a.size() + b.size());
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (i->cell < j->cell) {
            out.push_back(*i++);
        } else if (j->cell < i->cell) {
            out.push_back(*j++);
        } else {
            out.push_back({i->cell, agg_merge(i->agg, j->agg)});
            ++i;
            ++j;
        }
    }
    out.insert(out.end(), i, a.end());
    out.insert(out.end(), j, b.end());
    return out;
}

AggregateRaster finalize(const CellMap& cells, const GridSpec& spec) {
    spec.validate();
    SortedCells entries;
    entries.reserve(cells.size());
    for (const auto& [cell, agg] : cells) {
        if (cell.row < 0 || cell.row >= spec.n_rows || cell.col < 0 || cell.col >= spec.n_cols) {
            throw std::out_of_range("cell (" + std::to_string(cell.row) + ", " +
                                    std::to_string(cell.col) + ") is outside the grid");
        }
        entries.push_back({cell.row * spec.n_cols + cell.col, agg});
    }
    std::sort(entries.begin(), entries.end(),
              [](const CellEntry& x, const CellEntry& y) { return x.cell < y.cell; });
    return finalize(std::span<const CellEntry>(entries), spec);
}

AggregateRaster finalize(std::span<const CellEntry> cells, const GridSpec& spec) {
    spec.validate();
    AggregateRaster raster;
    raster.spec = spec;
    raster.count_band = Matrix<std::int64_t>(spec.n_rows, spec.n_cols, 0);
    raster.mean_speed_band = Matrix<double>(spec.n_rows, spec.n_cols, kNodata);
    raster.max_speed_band = Matrix<double>(spec.n_rows, spec.n_cols, kNodata);

    // The kernel runs over occupied cells only, then results are scattered.
    const std::size_t k = cells.size();
    std::vector<double> sum(k, 0.0);
    std::vector<double> valid(k, 0.0);
    std::vector<double> max(k, 0.0);
    const std::int64_t n = spec.cell_count();
    for (std::size_t j = 0; j < k; ++j) {
        const CellEntry& e = cells[j];
        if (e.cell < 0 || e.cell >= n) {
            throw std::out_of_range("cell " + std::to_string(e.cell) + " is outside the grid");
        }
        if (j > 0 && !(cells[j - 1].cell < e.cell)) {
            throw std::invalid_argument("cell entries must be strictly increasing");
        }
        if (e.agg.valid > 0) {
            sum[j] = e.agg.speed_sum();
            valid[j] = static_cast<double>(e.agg.valid);
            max[j] = e.agg.max;
        }
    }
    std::vector<double> mean_out(k);
    std::vector<double> max_out(k);
    kernels::finalize_speed_bands(sum, valid, max, kNodata, mean_out, max_out);

    for (std::size_t j = 0; j < k; ++j) {
        const auto i = static_cast<std::size_t>(cells[j].cell);
        raster.count_band.values[i] = static_cast<std::int64_t>(cells[j].agg.count);
        raster.mean_speed_band.values[i] = mean_out[j];
        raster.max_speed_band.values[i] = max_out[j];
    }
    return raster;
}

}  // namespace trajraster
