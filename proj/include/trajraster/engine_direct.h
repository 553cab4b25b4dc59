#pragma once

// Direct structured-grid rasterization: project, bin arithmetically,
// aggregate per cell, densify. No cell geometry is ever materialized.

#include <cstddef>
#include <span>

#include "trajraster/grid.h"
#include "trajraster/ingest.h"
#include "trajraster/timing.h"

namespace trajraster {

struct RasterizeResult {
    AggregateRaster raster;
    TimingReport timing;
    std::size_t n_input = 0;
    std::size_t n_binned = 0;
    /// Points outside the projection guard band.
    std::size_t skipped_projection = 0;
    /// Points that projected fine but fell outside the grid.
    std::size_t skipped_outside = 0;
};

/// Splits `points` into `workers` contiguous slices, each aggregated into a
/// private sorted cell map on its own thread, then folds the maps in slice order.
/// Count and max bands do not depend on `workers`; neither does the mean
/// band in practice since the per-cell sums are compensated.
///
/// Throws std::invalid_argument for workers == 0 or an invalid grid.
RasterizeResult rasterize_direct(std::span<const TrajectoryPoint> points, const GridSpec& spec,
                                 unsigned workers);

}  // namespace trajraster
