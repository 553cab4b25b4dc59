#include "trajraster/bench.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <random>
#include <type_traits>
#include <stdexcept>

#include "trajraster/engine_direct.h"
#include "text.h"

namespace trajraster::bench {

std::string_view engine_name(Engine engine) noexcept {
    return engine == Engine::kVectorGrid ? "vectorgrid" : "direct";
}

std::optional<Engine> parse_engine(std::string_view name) noexcept {
    if (name == "direct") return Engine::kDirect;
    if (name == "vectorgrid") return Engine::kVectorGrid;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Synthetic workloads

namespace {

// Folds v into [lo, hi] by mirroring at both ends.
double reflect(double v, double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) return lo;
    const double period = 2.0 * span;
    double t = std::fmod(v - lo, period);
    if (t < 0.0) t += period;
    if (t > span) t = period - t;
    return lo + t;
}

}  // namespace

std::vector<TrajectoryPoint> generate_synthetic(std::size_t n_points, const GridSpec& spec,
                                                std::size_t n_trajectories, std::uint64_t seed) {
    spec.validate();
    if (n_trajectories < 1 || n_points < n_trajectories) {
        throw std::invalid_argument("need n_points >= n_trajectories >= 1");
    }

    // Margin keeps inverse->forward round-off from leaving the grid.
    const double margin = 1e-6 * spec.pixel_size;
    const double lo_x = spec.min_x() + margin;
    const double hi_x = spec.max_x() - margin;
    const double lo_y = spec.min_y() + margin;
    const double hi_y = spec.max_y() - margin;
    const double sigma = 3.0 * spec.pixel_size;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(lo_x, hi_x);
    std::uniform_real_distribution<double> uy(lo_y, hi_y);
    std::normal_distribution<double> step(0.0, sigma);

    std::vector<RawFix> fixes;
    fixes.reserve(n_points);
    const std::size_t base = n_points / n_trajectories;
    const std::size_t extra = n_points % n_trajectories;
    for (std::size_t k = 0; k < n_trajectories; ++k) {
        const std::string id = "t" + std::to_string(k);
        const std::size_t len = base + (k < extra ? 1 : 0);
        double x = ux(rng);
        double y = uy(rng);
        for (std::size_t j = 0; j < len; ++j) {
            if (j > 0) {
                x = reflect(x + step(rng), lo_x, hi_x);
                y = reflect(y + step(rng), lo_y, hi_y);
            }
            fixes.push_back(RawFix{id, kSyntheticEpoch + static_cast<double>(j),
                                   geo::project_inverse({x, y}), std::nullopt});
        }
    }
    return derive_speeds(fixes);
}

geo::GeoCoord default_area_anchor() noexcept { return {45.53, -73.62}; }

GridSpec area_grid(double area_km2, double pixel_size) {
    if (!(area_km2 > 0.0) || !(pixel_size > 0.0)) {
        throw std::invalid_argument("area and pixel size must be positive");
    }
    const geo::ProjCoord origin = geo::project_forward(default_area_anchor());
    const double side = std::sqrt(area_km2) * 1000.0;
    const auto n = static_cast<std::int64_t>(std::ceil(side / pixel_size));
    return GridSpec{origin.x, origin.y, pixel_size, n, n};
}

// ---------------------------------------------------------------------------
// Digest

namespace {

std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

template <typename T>
std::uint64_t band_digest(const std::vector<T>& values) {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits = 0;
        if constexpr (std::is_same_v<T, double>) {
            bits = std::bit_cast<std::uint64_t>(values[i] == 0.0 ? 0.0 : values[i]);
        } else {
            bits = static_cast<std::uint64_t>(values[i]);
        }
        acc += mix(mix(i) ^ bits);  // wrapping sum: position-keyed, order-free
    }
    return acc;
}

}  // namespace

RasterDigest digest(const AggregateRaster& raster) {
    return {band_digest(raster.count_band.values), band_digest(raster.mean_speed_band.values),
            band_digest(raster.max_speed_band.values)};
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

std::string failure(std::string_view what) {
    std::string s = "failed: ";
    s += what;
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result;
    try {
        const GridSpec spec = area_grid(cfg.area_km2, cfg.pixel_size);
        const std::size_t n_traj =
            cfg.n_trajectories > 0 ? cfg.n_trajectories : std::max<std::size_t>(1, cfg.n_points / 1000);

        Stopwatch clock;
        const auto points = generate_synthetic(cfg.n_points, spec, n_traj, cfg.seed);
        const double t_ingest = clock.elapsed();

        RasterizeResult run = cfg.engine == Engine::kDirect
                                  ? rasterize_direct(points, spec, std::max(1u, cfg.workers))
                                  : rasterize_vectorgrid(points, spec, {.max_cells = cfg.max_cells});
        result.timing = run.timing;
        result.timing.t_ingest = t_ingest;
        result.digest = digest(run.raster);
    } catch (const MemoryBudgetError& e) {
        result.status = failure(std::string("memory budget: ") + e.what());
    } catch (const std::exception& e) {
        result.status = failure(e.what());
    }
    return result;
}

std::vector<ExperimentConfig> scaled_preset(std::span<const Engine> engines,
                                                  unsigned workers, std::uint64_t seed) {
    struct Cell {
        double area_km2;
        std::vector<std::size_t> points;
    };
    // Full-size study areas (100..900 km2, 5..20 M points) divided by 50.
    const std::vector<Cell> table = {
        {2.0, {100'000}},
        {4.5, {100'000, 200'000, 220'000}},
        {8.0, {100'000, 200'000, 300'000}},
        {12.5, {100'000, 200'000, 300'000, 360'000}},
        {18.0, {100'000, 200'000, 300'000, 400'000}},
    };
    std::vector<ExperimentConfig> configs;
    for (const Engine engine : engines) {
        for (const Cell& cell : table) {
            for (const std::size_t n : cell.points) {
                ExperimentConfig cfg;
                cfg.area_km2 = cell.area_km2;
                cfg.n_points = n;
                cfg.engine = engine;
                cfg.workers = engine == Engine::kDirect ? workers : 1;
                cfg.seed = seed;
                configs.push_back(cfg);
            }
        }
    }
    return configs;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ExperimentResult median_of(std::span<const ExperimentResult> runs) {
    ExperimentResult out;
    std::vector<const ExperimentResult*> ok;
    for (const auto& r : runs) {
        if (r.ok()) ok.push_back(&r);
    }
    if (ok.empty()) {
        out.status = runs.empty() ? failure("no repetitions") : runs.front().status;
        return out;
    }
    auto stage = [&](double TimingReport::*field) {
        std::vector<double> v;
        for (const auto* r : ok) v.push_back(r->timing.*field);
        return median(std::move(v));
    };
    out.timing.t_ingest = stage(&TimingReport::t_ingest);
    out.timing.t_transform = stage(&TimingReport::t_transform);
    out.timing.t_grid_creation = stage(&TimingReport::t_grid_creation);
    out.timing.t_spatial_join = stage(&TimingReport::t_spatial_join);
    out.timing.t_rasterize = stage(&TimingReport::t_rasterize);
    out.timing.t_total = stage(&TimingReport::t_total);
    out.digest = ok.front()->digest;
    for (const auto* r : ok) {
        if (!(r->digest == out.digest)) out.status = failure("digest differs between repetitions");
    }
    if (out.ok() && ok.size() != runs.size()) out.status = failure("some repetitions failed");
    return out;
}

}  // namespace

std::vector<ReportRow> run_matrix(std::span<const ExperimentConfig> configs,
                                  std::size_t repetitions) {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    std::vector<ReportRow> rows;
    for (const auto& cfg : configs) {
        std::vector<ExperimentResult> runs;
        for (std::size_t rep = 0; rep < repetitions; ++rep) {
            runs.push_back(run_experiment(cfg));
            rows.push_back({cfg, std::to_string(rep), runs.back()});
        }
        rows.push_back({cfg, "median", median_of(runs)});
    }
    return rows;
}

void write_report(std::ostream& out, std::span<const ReportRow> rows) {
    out << kReportHeader << '\n';
    char buf[32];
    auto seconds = [&](std::string& line, double s) {
        std::snprintf(buf, sizeof(buf), "%.3f", s);
        line += buf;
    };
    std::string line;
    for (const auto& row : rows) {
        const auto& c = row.config;
        const auto& t = row.result.timing;
        line.clear();
        line += engine_name(c.engine);
        line += ',';
        text::append_double(line, c.area_km2);
        line += ',';
        line += std::to_string(c.n_points);
        line += ',';
        text::append_double(line, c.pixel_size);
        line += ',' + std::to_string(c.workers) + ',' + std::to_string(c.seed) + ',' + row.rep + ',';
        for (const double s : {t.t_ingest, t.t_transform, t.t_grid_creation, t.t_spatial_join,
                               t.t_rasterize, t.t_total}) {
            seconds(line, s);
            line += ',';
        }
        line += hex(row.result.digest.count) + ',' + hex(row.result.digest.mean) + ',' +
                hex(row.result.digest.max) + ',' + row.result.status + '\n';
        out << line;
    }
}

}  // namespace trajraster::bench
