#include "trajraster/engine_vectorgrid.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "trajraster/geo.h"
#include "trajraster/timing.h"

namespace trajraster {

VectorGrid create_vector_grid(const GridSpec& spec, std::int64_t max_cells) {
    spec.validate();
    // Checked before multiplying so absurd dimensions cannot overflow.
    if (spec.n_cols > max_cells || spec.n_rows > max_cells / spec.n_cols) {
        throw MemoryBudgetError("vector grid of " + std::to_string(spec.n_cols) + " x " +
                                std::to_string(spec.n_rows) + " cells exceeds the budget of " +
                                std::to_string(max_cells) + " cells");
    }

    Stopwatch clock;
    VectorGrid grid;
    grid.cells.reserve(static_cast<std::size_t>(spec.cell_count()));
    for (std::int64_t row = 0; row < spec.n_rows; ++row) {
        const double top = spec.row_top(row);
        const double bottom = spec.row_top(row + 1);
        for (std::int64_t col = 0; col < spec.n_cols; ++col) {
            grid.cells.push_back(GridCellPolygon{
                .cell = {row, col},
                .min_x = spec.col_left(col),
                .min_y = bottom,
                .max_x = spec.col_left(col + 1),
                .max_y = top,
            });
        }
    }
    grid.duration = clock.elapsed();
    return grid;
}

// ---------------------------------------------------------------------------
// BoxTree

namespace {

struct Rect {
    double min_x, min_y, max_x, max_y;
    double cx() const { return 0.5 * (min_x + max_x); }
    double cy() const { return 0.5 * (min_y + max_y); }
};

// Sort-tile-recursive ordering: slices by x-center, each slice by y-center.
std::vector<std::uint32_t> str_order(std::span<const Rect> rects, std::size_t fanout) {
    const std::size_t n = rects.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    const std::size_t groups = (n + fanout - 1) / fanout;
    const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(groups))));
    const std::size_t per_slice = slices * fanout;

    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return rects[a].cx() < rects[b].cx() || (rects[a].cx() == rects[b].cx() && a < b);
    });
    for (std::size_t start = 0; start < n; start += per_slice) {
        const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
        const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + per_slice));
        std::sort(first, last, [&](std::uint32_t a, std::uint32_t b) {
            return rects[a].cy() < rects[b].cy() || (rects[a].cy() == rects[b].cy() && a < b);
        });
    }
    return order;
}

Rect bounds_of(std::span<const Rect> rects) {
    Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Rect& c : rects) {
        r.min_x = std::min(r.min_x, c.min_x);
        r.min_y = std::min(r.min_y, c.min_y);
        r.max_x = std::max(r.max_x, c.max_x);
        r.max_y = std::max(r.max_y, c.max_y);
    }
    return r;
}

}  // namespace

BoxTree::BoxTree(std::span<const GridCellPolygon> cells) : cells_(cells) {
    if (cells.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw MemoryBudgetError("too many cells for a 32-bit box tree");
    }
    if (cells.empty()) return;

    std::vector<Rect> rects(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        rects[i] = {cells[i].min_x, cells[i].min_y, cells[i].max_x, cells[i].max_y};
    }
    items_ = str_order(rects, kFanout);

    // Leaves over consecutive runs of STR-ordered items.
    std::vector<Node> level;
    std::vector<Rect> level_rects;
    std::vector<Rect> scratch;
    for (std::size_t start = 0; start < items_.size(); start += kFanout) {
        const std::size_t count = std::min(kFanout, items_.size() - start);
        scratch.clear();
        for (std::size_t k = 0; k < count; ++k) scratch.push_back(rects[items_[start + k]]);
        const Rect b = bounds_of(scratch);
        level.push_back({b.min_x, b.min_y, b.max_x, b.max_y, static_cast<std::uint32_t>(start),
                         static_cast<std::uint32_t>(count), true});
        level_rects.push_back(b);
    }
    height_ = 1;

    while (level.size() > 1) {
        const auto order = str_order(level_rects, kFanout);
        const auto base = static_cast<std::uint32_t>(nodes_.size());
        std::vector<Rect> ordered_rects(order.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            nodes_.push_back(level[order[k]]);
            ordered_rects[k] = level_rects[order[k]];
        }

        std::vector<Node> parents;
        std::vector<Rect> parent_rects;
        for (std::size_t start = 0; start < order.size(); start += kFanout) {
            const std::size_t count = std::min(kFanout, order.size() - start);
            const Rect b = bounds_of(std::span(ordered_rects).subspan(start, count));
            parents.push_back({b.min_x, b.min_y, b.max_x, b.max_y,
                               base + static_cast<std::uint32_t>(start),
                               static_cast<std::uint32_t>(count), false});
            parent_rects.push_back(b);
        }
        level = std::move(parents);
        level_rects = std::move(parent_rects);
        ++height_;
    }
    root_ = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(level.front());
}

std::optional<std::size_t> BoxTree::find_containing(double x, double y) const {
    if (nodes_.empty()) return std::nullopt;
    // Depth is log16(cells); 64 slots per level is plenty.
    std::uint32_t stack[64 * kFanout];
    std::size_t top = 0;
    stack[top++] = root_;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!(node.min_x <= x && x <= node.max_x && node.min_y <= y && y <= node.max_y)) continue;
        if (node.leaf) {
            for (std::uint32_t k = 0; k < node.count; ++k) {
                const std::uint32_t item = items_[node.first + k];
                if (cells_[item].contains(x, y)) return item;
            }
        } else {
            for (std::uint32_t k = 0; k < node.count; ++k) stack[top++] = node.first + k;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

JoinResult spatial_join(std::span<const TrajectoryPoint> points,
                        std::span<const GridCellPolygon> cells) {
    Stopwatch clock;
    JoinResult result;
    const BoxTree index(cells);
    for (const TrajectoryPoint& p : points) {
        if (!geo::in_projection_band(p.fix.coord)) {
            ++result.skipped_projection;
            continue;
        }
        const geo::ProjCoord xy = geo::project_forward_unchecked(p.fix.coord);
        const auto hit = index.find_containing(xy.x, xy.y);
        if (!hit) {
            ++result.skipped_outside;
            continue;
        }
        agg_insert_into(result.cells[cells[*hit].cell], p.speed);
        ++result.n_joined;
    }
    result.duration = clock.elapsed();
    return result;
}

RasterizeResult rasterize_vectorgrid(std::span<const TrajectoryPoint> points, const GridSpec& spec,
                                     const VectorGridOptions& options) {
    RasterizeResult result;
    result.n_input = points.size();

    const VectorGrid grid = create_vector_grid(spec, options.max_cells);
    result.timing.t_grid_creation = grid.duration;

    JoinResult joined = spatial_join(points, grid.cells);
    result.timing.t_spatial_join = joined.duration;
    result.n_binned = joined.n_joined;
    result.skipped_projection = joined.skipped_projection;
    result.skipped_outside = joined.skipped_outside;

    Stopwatch clock;
    result.raster = finalize(joined.cells, spec);
    result.timing.t_rasterize = clock.elapsed();
    result.timing.close_total();
    return result;
}

}  // namespace trajraster
