#pragma once

// Benchmark harness: synthetic workloads, the scaled experiment matrix,
// per-stage timing and CSV reporting.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajraster/engine_vectorgrid.h"
#include "trajraster/grid.h"
#include "trajraster/ingest.h"
#include "trajraster/timing.h"

namespace trajraster::bench {

enum class Engine { kDirect, kVectorGrid };

std::string_view engine_name(Engine engine) noexcept;
/// "direct" or "vectorgrid"; nullopt otherwise.
std::optional<Engine> parse_engine(std::string_view name) noexcept;

/// Seeded random walks inside `spec`. Each trajectory starts uniformly in
/// the extent and takes 1 s steps with N(0, (3*pixel_size)^2) displacement
/// per axis, reflecting at the borders. Speeds follow the ingest rules.
/// Trajectory ids are "t<k>"; timestamps start at kSyntheticEpoch.
std::vector<TrajectoryPoint> generate_synthetic(std::size_t n_points, const GridSpec& spec,
                                                std::size_t n_trajectories, std::uint64_t seed);

inline constexpr double kSyntheticEpoch = 1464739200.0;  // 2016-06-01T00:00:00Z

/// Top-left corner used for generated test areas (downtown Montreal).
geo::GeoCoord default_area_anchor() noexcept;

/// Square area of `area_km2` anchored at default_area_anchor(), n = ceil(side/px).
GridSpec area_grid(double area_km2, double pixel_size);

struct ExperimentConfig {
    double area_km2 = 2.0;
    std::size_t n_points = 100'000;
    double pixel_size = 5.0;
    Engine engine = Engine::kDirect;
    unsigned workers = 1;
    std::uint64_t seed = 1;
    /// 0 picks max(1, n_points / 1000).
    std::size_t n_trajectories = 0;
    std::int64_t max_cells = kDefaultMaxGridCells;
};

/// Order-independent per-band checksums.
struct RasterDigest {
    std::uint64_t count = 0;
    std::uint64_t mean = 0;
    std::uint64_t max = 0;

    bool operator==(const RasterDigest&) const = default;
};

RasterDigest digest(const AggregateRaster& raster);
std::string hex(std::uint64_t v);

struct ExperimentResult {
    TimingReport timing;
    RasterDigest digest;
    /// "ok" or "failed: <reason>".
    std::string status = "ok";
    bool ok() const { return status == "ok"; }
};

/// Generates the workload (timed as t_ingest), runs the engine, digests the
/// raster. Engine failures come back as a failed status, not an exception.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// The full-size area/point study matrix scaled down 50x: 15 pairs over
/// five areas from 2 to 18 km2. Selected on the CLI by `--preset paper-scaled`.
std::vector<ExperimentConfig> scaled_preset(std::span<const Engine> engines,
                                                  unsigned workers, std::uint64_t seed);

struct ReportRow {
    ExperimentConfig config;
    std::string rep;  // "0", "1", ... or "median"
    ExperimentResult result;
};

/// Runs configs sequentially, `repetitions` times each, and appends one
/// median row per config (stage-wise medians over successful runs).
std::vector<ReportRow> run_matrix(std::span<const ExperimentConfig> configs,
                                  std::size_t repetitions);

/// CSV with a header; times in seconds with 3 decimals.
void write_report(std::ostream& out, std::span<const ReportRow> rows);

inline constexpr std::string_view kReportHeader =
    "engine,area_km2,n_points,pixel_size,workers,seed,rep,t_ingest,t_transform,"
    "t_grid_creation,t_spatial_join,t_rasterize,t_total,digest_count,digest_mean,"
    "digest_max,status";

}  // namespace trajraster::bench
