#pragma once

// Baseline strategy: materialize every cell as a box, index the boxes,
// join points against the index, then rasterize the joined aggregates.
// Deliberately single-threaded.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "trajraster/engine_direct.h"
#include "trajraster/grid.h"
#include "trajraster/ingest.h"

namespace trajraster {

inline constexpr std::int64_t kDefaultMaxGridCells = 200'000'000;

class MemoryBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned cell box. Contains (x, y) iff
/// min_x <= x < max_x and min_y < y <= max_y.
struct GridCellPolygon {
    CellIndex cell;
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    bool contains(double x, double y) const noexcept {
        return min_x <= x && x < max_x && min_y < y && y <= max_y;
    }
};

struct VectorGrid {
    std::vector<GridCellPolygon> cells;  // row-major
    double duration = 0.0;               // seconds
};

/// Throws MemoryBudgetError when spec.cell_count() > max_cells.
VectorGrid create_vector_grid(const GridSpec& spec,
                              std::int64_t max_cells = kDefaultMaxGridCells);

/// Bulk-loaded (sort-tile-recursive) bounding-box tree over cell boxes.
class BoxTree {
public:
    static constexpr std::size_t kFanout = 16;

    explicit BoxTree(std::span<const GridCellPolygon> cells);

    /// Index into the cell span of the box containing (x, y).
    std::optional<std::size_t> find_containing(double x, double y) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t height() const noexcept { return height_; }

private:
    struct Node {
        double min_x, min_y, max_x, max_y;
        std::uint32_t first;  // child node index, or item offset for leaves
        std::uint32_t count;
        bool leaf;
    };

    std::span<const GridCellPolygon> cells_;
    std::vector<std::uint32_t> items_;
    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
    std::size_t height_ = 0;
};

struct JoinResult {
    CellMap cells;
    double duration = 0.0;  // index build + projection + lookups, seconds
    std::size_t n_joined = 0;
    std::size_t skipped_projection = 0;
    std::size_t skipped_outside = 0;
};

/// Projects each point and assigns it to its containing cell via a BoxTree.
JoinResult spatial_join(std::span<const TrajectoryPoint> points,
                        std::span<const GridCellPolygon> cells);

struct VectorGridOptions {
    std::int64_t max_cells = kDefaultMaxGridCells;
};

/// create_vector_grid + spatial_join + finalize. Projection happens inside
/// the join, so t_transform stays 0.
RasterizeResult rasterize_vectorgrid(std::span<const TrajectoryPoint> points, const GridSpec& spec,
                                     const VectorGridOptions& options = {});

}  // namespace trajraster
