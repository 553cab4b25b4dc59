#include "commands.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "trajraster/bench.h"
#include "trajraster/engine_direct.h"
#include "trajraster/engine_vectorgrid.h"
#include "trajraster/ingest.h"
#include "trajraster/kernels.h"
#include "trajraster/raster_io.h"

namespace trajraster::cli {

namespace {

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct GridFlags {
    std::vector<double> origin;
    std::vector<std::int64_t> size;
    std::vector<double> extent_km;
    double pixel_size = 5.0;
};

void add_grid_flags(CLI::App& cmd, GridFlags& g) {
    cmd.add_option("--origin", g.origin, "Top-left corner in projected metres: <x> <y>")
        ->expected(2)
        ->allow_extra_args(false);
    auto* size = cmd.add_option("--size", g.size, "Grid size in cells: <cols> <rows>")
                     ->expected(2)
                     ->allow_extra_args(false);
    auto* extent = cmd.add_option("--extent-km", g.extent_km,
                                  "Grid extent in km: <w> <h>, cells = ceil(1000*km/pixel)")
                       ->expected(2)
                       ->allow_extra_args(false);
    size->excludes(extent);
    cmd.add_option("--pixel-size", g.pixel_size, "Cell size in metres")->capture_default_str();
}

// Throws std::invalid_argument on inconsistent flags.
GridSpec grid_from_flags(const GridFlags& g) {
    if (g.origin.size() != 2) throw std::invalid_argument("--origin <x> <y> is required");
    if (!(g.pixel_size > 0.0) || !std::isfinite(g.pixel_size)) {
        throw std::invalid_argument("--pixel-size must be positive");
    }
    GridSpec spec;
    spec.origin_x = g.origin[0];
    spec.origin_y = g.origin[1];
    spec.pixel_size = g.pixel_size;
    if (g.size.size() == 2) {
        spec.n_cols = g.size[0];
        spec.n_rows = g.size[1];
    } else if (g.extent_km.size() == 2) {
        if (!(g.extent_km[0] > 0.0) || !(g.extent_km[1] > 0.0)) {
            throw std::invalid_argument("--extent-km values must be positive");
        }
        spec.n_cols = static_cast<std::int64_t>(std::ceil(1000.0 * g.extent_km[0] / g.pixel_size));
        spec.n_rows = static_cast<std::int64_t>(std::ceil(1000.0 * g.extent_km[1] / g.pixel_size));
    } else {
        throw std::invalid_argument("one of --size or --extent-km is required");
    }
    spec.validate();
    return spec;
}

std::string seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", s);
    return buf;
}

// ---------------------------------------------------------------------------

struct RasterizeFlags {
    std::string input;
    GridFlags grid;
    std::string engine = "direct";
    unsigned workers = default_workers();
    std::string out;
    std::int64_t max_cells = kDefaultMaxGridCells;
    std::size_t sort_rows = 10'000'000;
};

int cmd_rasterize(const RasterizeFlags& f, std::ostream& out, std::ostream& err) {
    GridSpec spec;
    std::optional<bench::Engine> engine = bench::parse_engine(f.engine);
    try {
        spec = grid_from_flags(f.grid);
        if (!engine) throw std::invalid_argument("--engine must be direct or vectorgrid");
        if (f.workers < 1) throw std::invalid_argument("--workers must be >= 1");
        if (f.max_cells < 1) throw std::invalid_argument("--max-cells must be >= 1");
    } catch (const std::invalid_argument& e) {
        err << "rasterize: " << e.what() << "\n";
        return kConfigError;
    }

    std::ifstream in(f.input);
    if (!in) {
        err << "rasterize: cannot open " << f.input << "\n";
        return kIoError;
    }

    std::vector<TrajectoryPoint> points;
    StreamStats stats;
    Stopwatch clock;
    try {
        ExternalSortOptions options;
        options.max_in_memory_rows = f.sort_rows;
        stats = derive_speeds_streaming(in, options, [&](TrajectoryPoint&& p) {
            // Out-of-area points are dropped here so memory tracks the area,
            // not the whole file.
            if (!geo::in_projection_band(p.fix.coord)) return;
            const auto xy = geo::project_forward_unchecked(p.fix.coord);
            if (bin_point_linear(xy.x, xy.y, spec) >= 0) points.push_back(std::move(p));
        });
    } catch (const ParseError& e) {
        err << "rasterize: " << f.input << ": " << e.what() << "\n";
        return kIoError;
    }
    const double t_ingest = clock.elapsed();

    RasterizeResult result;
    try {
        result = *engine == bench::Engine::kDirect
                     ? rasterize_direct(points, spec, f.workers)
                     : rasterize_vectorgrid(points, spec, {.max_cells = f.max_cells});
    } catch (const MemoryBudgetError& e) {
        err << "rasterize: " << e.what() << "\n";
        return kMemoryBudget;
    } catch (const std::bad_alloc&) {
        err << "rasterize: out of memory\n";
        return kMemoryBudget;
    }
    result.timing.t_ingest = t_ingest;

    for (const Band band : {Band::kCount, Band::kMean, Band::kMax}) {
        const std::string path = f.out + std::string(band_suffix(band)) + ".asc";
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        try {
            if (!file) throw std::runtime_error("cannot create file");
            write_ascii_grid(result.raster, band, file);
            file.close();
            if (!file) throw std::runtime_error("write failed");
        } catch (const std::exception& e) {
            err << "rasterize: " << path << ": " << e.what() << "\n";
            return kIoError;
        }
    }

    err << "rasterize: " << stats.rows << " rows read, " << stats.skipped << " malformed, "
        << points.size() << " inside the grid, engine " << f.engine << ", kernels "
        << kernels::isa_name(kernels::active_isa()) << "\n";
    const TimingReport& t = result.timing;
    out << seconds(t.t_ingest) << ',' << seconds(t.t_transform) << ','
        << seconds(t.t_grid_creation) << ',' << seconds(t.t_spatial_join) << ','
        << seconds(t.t_rasterize) << ',' << seconds(t.t_total) << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------

int cmd_compare(const std::string& a_prefix, const std::string& b_prefix, std::ostream& out,
                std::ostream& err) {
    bool identical = true;
    std::ostringstream report;
    for (const Band band : {Band::kCount, Band::kMean, Band::kMax}) {
        const std::string suffix = std::string(band_suffix(band)) + ".asc";
        AsciiGrid grids[2];
        const std::string paths[2] = {a_prefix + suffix, b_prefix + suffix};
        for (int k = 0; k < 2; ++k) {
            std::ifstream in(paths[k]);
            if (!in) {
                err << "compare: cannot open " << paths[k] << "\n";
                return kIoError;
            }
            try {
                grids[k] = read_ascii_grid(in);
            } catch (const RasterFormatError& e) {
                err << "compare: " << paths[k] << ": " << e.what() << "\n";
                return kIoError;
            }
        }
        DiffReport diff;
        try {
            diff = raster_diff(grids[0].values, grids[1].values, grids[0].header.nodata);
        } catch (const DimensionMismatch& e) {
            err << "compare: " << suffix << ": " << e.what() << "\n";
            return kConfigError;
        }
        if (diff.n_differing_cells != 0) identical = false;
        report << suffix.substr(1, suffix.size() - 5) << ": n_differing_cells=" << diff.n_differing_cells
               << " max_abs_diff=" << diff.max_abs_diff << "\n";
    }
    if (identical) {
        out << "IDENTICAL\n";
        return kOk;
    }
    out << report.str();
    return kRastersDiffer;
}

// ---------------------------------------------------------------------------

struct BenchFlags {
    std::string preset;
    std::vector<double> areas;
    std::vector<std::size_t> points;
    std::vector<std::string> engines{"direct", "vectorgrid"};
    unsigned workers = default_workers();
    std::size_t reps = 3;
    std::uint64_t seed = 1;
    double pixel_size = 5.0;
    std::int64_t max_cells = kDefaultMaxGridCells;
    std::string out;
};

int cmd_bench(const BenchFlags& f, const std::string& usage, std::ostream& out, std::ostream& err) {
    if (f.preset.empty() && (f.areas.empty() || f.points.empty())) {
        err << "bench: give --preset paper-scaled or both --areas and --points\n\n" << usage;
        return kConfigError;
    }
    std::vector<bench::Engine> engines;
    for (const auto& name : f.engines) {
        const auto e = bench::parse_engine(name);
        if (!e) {
            err << "bench: unknown engine '" << name << "'\n";
            return kConfigError;
        }
        engines.push_back(*e);
    }
    if (f.reps < 1 || f.workers < 1) {
        err << "bench: --reps and --workers must be >= 1\n";
        return kConfigError;
    }

    std::vector<bench::ExperimentConfig> configs;
    if (!f.preset.empty()) {
        if (f.preset != "paper-scaled") {
            err << "bench: unknown preset '" << f.preset << "'\n";
            return kConfigError;
        }
        configs = bench::scaled_preset(engines, f.workers, f.seed);
    } else {
        for (const auto engine : engines) {
            for (const double area : f.areas) {
                for (const std::size_t n : f.points) {
                    bench::ExperimentConfig cfg;
                    cfg.area_km2 = area;
                    cfg.n_points = n;
                    cfg.engine = engine;
                    cfg.workers = engine == bench::Engine::kDirect ? f.workers : 1;
                    cfg.seed = f.seed;
                    configs.push_back(cfg);
                }
            }
        }
    }
    for (auto& cfg : configs) {
        cfg.pixel_size = f.pixel_size;
        cfg.max_cells = f.max_cells;
        if (!(cfg.area_km2 > 0.0) || cfg.n_points < 1 || !(cfg.pixel_size > 0.0)) {
            err << "bench: areas, points and pixel size must be positive\n";
            return kConfigError;
        }
    }

    const auto rows = bench::run_matrix(configs, f.reps);
    if (f.out.empty()) {
        bench::write_report(out, rows);
        return kOk;
    }
    std::ofstream file(f.out, std::ios::trunc);
    bench::write_report(file, rows);
    file.close();
    if (!file) {
        err << "bench: cannot write " << f.out << "\n";
        return kIoError;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct GenFlags {
    std::size_t points = 0;
    std::uint64_t seed = 1;
    std::size_t trajectories = 0;
    double area_km2 = 2.0;
    GridFlags grid;
    bool with_speed = false;
    std::string out;
};

int cmd_gen(const GenFlags& f, std::ostream& out, std::ostream& err) {
    GridSpec spec;
    try {
        if (f.points < 1) throw std::invalid_argument("--points must be >= 1");
        if (!f.grid.origin.empty() || !f.grid.size.empty() || !f.grid.extent_km.empty()) {
            spec = grid_from_flags(f.grid);
        } else {
            spec = bench::area_grid(f.area_km2, f.grid.pixel_size);
        }
    } catch (const std::invalid_argument& e) {
        err << "gen: " << e.what() << "\n";
        return kConfigError;
    }
    const std::size_t n_traj =
        f.trajectories > 0 ? f.trajectories : std::max<std::size_t>(1, f.points / 1000);
    if (n_traj > f.points) {
        err << "gen: --trajectories cannot exceed --points\n";
        return kConfigError;
    }

    const auto pts = bench::generate_synthetic(f.points, spec, n_traj, f.seed);
    err << "gen: grid --origin " << std::to_string(spec.origin_x) << ' '
        << std::to_string(spec.origin_y) << " --size " << spec.n_cols << ' ' << spec.n_rows
        << " --pixel-size " << spec.pixel_size << "\n";
    if (f.out.empty()) {
        write_csv(out, pts, f.with_speed);
        return kOk;
    }
    std::ofstream file(f.out, std::ios::binary | std::ios::trunc);
    write_csv(file, pts, f.with_speed);
    file.close();
    if (!file) {
        err << "gen: cannot write " << f.out << "\n";
        return kIoError;
    }
    return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rasterize GPS trajectory points into count / mean speed / max speed grids"};
    app.name("trajraster");
    app.require_subcommand(1);

    RasterizeFlags rf;
    auto* rasterize = app.add_subcommand("rasterize", "Rasterize a trajectory CSV");
    rasterize->add_option("--input", rf.input, "CSV: id,timestamp,latitude,longitude[,speed]")
        ->required();
    add_grid_flags(*rasterize, rf.grid);
    rasterize->add_option("--engine", rf.engine, "direct | vectorgrid")->capture_default_str();
    rasterize->add_option("--workers", rf.workers, "Threads for the direct engine")
        ->capture_default_str();
    rasterize->add_option("--out", rf.out, "Output prefix")->required();
    rasterize->add_option("--max-cells", rf.max_cells, "Cell budget for the vector grid")
        ->capture_default_str();
    rasterize->add_option("--sort-buffer-rows", rf.sort_rows,
                          "Rows sorted in memory before spilling to disk")
        ->capture_default_str();

    std::vector<std::string> prefixes;
    auto* compare = app.add_subcommand("compare", "Difference two rasterize outputs");
    compare->add_option("prefixes", prefixes, "<a_prefix> <b_prefix>")->expected(2)->required();

    BenchFlags bf;
    auto* bench_cmd = app.add_subcommand("bench", "Run the timing experiment matrix");
    bench_cmd->add_option("--preset", bf.preset, "paper-scaled");
    bench_cmd->add_option("--areas", bf.areas, "Test areas in km2")->delimiter(',');
    bench_cmd->add_option("--points", bf.points, "Point counts")->delimiter(',');
    bench_cmd->add_option("--engines", bf.engines, "direct,vectorgrid")->delimiter(',');
    bench_cmd->add_option("--workers", bf.workers, "Direct-engine threads")->capture_default_str();
    bench_cmd->add_option("--reps", bf.reps, "Repetitions per config")->capture_default_str();
    bench_cmd->add_option("--seed", bf.seed, "Workload seed")->capture_default_str();
    bench_cmd->add_option("--pixel-size", bf.pixel_size, "Cell size in metres")
        ->capture_default_str();
    bench_cmd->add_option("--max-cells", bf.max_cells, "Cell budget for the vector grid")
        ->capture_default_str();
    bench_cmd->add_option("--out", bf.out, "Report CSV (default: stdout)");

    GenFlags gf;
    auto* gen = app.add_subcommand("gen", "Write a synthetic trajectory CSV");
    gen->add_option("--points", gf.points, "Number of fixes")->required();
    gen->add_option("--seed", gf.seed, "Random seed")->capture_default_str();
    gen->add_option("--trajectories", gf.trajectories, "Number of trajectories");
    gen->add_option("--area-km2", gf.area_km2, "Square test area near Montreal")
        ->capture_default_str();
    add_grid_flags(*gen, gf.grid);
    gen->add_flag("--with-speed", gf.with_speed, "Also write the derived speed column");
    gen->add_option("--out", gf.out, "Output CSV (default: stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        CLI::App* context = &app;
        for (auto* sub : {rasterize, compare, bench_cmd, gen}) {
            if (sub->parsed()) context = sub;
        }
        err << "error: " << e.what() << "\n\n" << context->help();
        return kConfigError;
    }

    if (rasterize->parsed()) return cmd_rasterize(rf, out, err);
    if (compare->parsed()) return cmd_compare(prefixes[0], prefixes[1], out, err);
    if (bench_cmd->parsed()) return cmd_bench(bf, bench_cmd->help(), out, err);
    return cmd_gen(gf, out, err);
}

}  // namespace trajraster::cli
