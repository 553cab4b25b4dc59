#include "trajraster/engine_direct.h"

#include <array>
#include <bit>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <thread>
#include <vector>

#include "trajraster/kernels.h"

namespace trajraster {

namespace {

struct Slice {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

std::vector<Slice> make_slices(std::size_t n, unsigned workers) {
    std::vector<Slice> slices(workers);
    for (unsigned w = 0; w < workers; ++w) {
        slices[w].begin = n * w / workers;
        slices[w].end = n * (w + 1) / workers;
    }
    return slices;
}

// Runs fn(w) for w in [0, workers); worker 0 runs on the calling thread.
template <typename Fn>
void run_workers(unsigned workers, Fn&& fn) {
    if (workers == 1) {
        fn(0u);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers - 1);
        for (unsigned w = 1; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    fn(w);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        try {
            fn(0u);
        } catch (...) {
            errors[0] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct Keyed {
    std::uint64_t cell;
    std::size_t pos;
};

// Groups one slice by cell: stable LSD radix sort of the binned points on
// their cell index, then one AggCell per run. Work is linear in the slice
// and does not depend on how many distinct cells it touches.
SortedCells group_by_cell(std::span<const std::int64_t> cells,
                          std::span<const TrajectoryPoint> points, std::int64_t cell_count) {
    std::vector<Keyed> keys;
    keys.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] >= 0) keys.push_back({static_cast<std::uint64_t>(cells[i]), i});
    }

    constexpr int kDigitBits = 11;
    constexpr std::size_t kBuckets = std::size_t{1} << kDigitBits;
    const int key_bits = std::bit_width(static_cast<std::uint64_t>(cell_count - 1));
    std::vector<Keyed> scratch(keys.size());
    for (int shift = 0; shift < key_bits; shift += kDigitBits) {
        std::array<std::size_t, kBuckets> offsets{};
        for (const Keyed& k : keys) ++offsets[(k.cell >> shift) & (kBuckets - 1)];
        std::size_t running = 0;
        for (auto& o : offsets) {
            const std::size_t c = o;
            o = running;
            running += c;
        }
        for (const Keyed& k : keys) scratch[offsets[(k.cell >> shift) & (kBuckets - 1)]++] = k;
        keys.swap(scratch);
    }

    SortedCells out;
    for (const Keyed& k : keys) {
        const auto cell = static_cast<std::int64_t>(k.cell);
        if (out.empty() || out.back().cell != cell) out.push_back({cell, agg_identity()});
        agg_insert_into(out.back().agg, points[k.pos].speed);
    }
    return out;
}

}  // namespace

RasterizeResult rasterize_direct(std::span<const TrajectoryPoint> points, const GridSpec& spec,
                                 unsigned workers) {
    if (workers == 0) throw std::invalid_argument("workers must be >= 1");
    spec.validate();

    const std::size_t n = points.size();
    const auto slices = make_slices(n, workers);
    RasterizeResult result;
    result.n_input = n;
    Stopwatch clock;

    // Transform.
    std::vector<double> lat(n);
    std::vector<double> lon(n);
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    std::vector<std::size_t> rejected(workers, 0);
    run_workers(workers, [&](unsigned w) {
        const Slice s = slices[w];
        for (std::size_t i = s.begin; i < s.end; ++i) {
            lat[i] = points[i].fix.coord.lat;
            lon[i] = points[i].fix.coord.lon;
        }
        rejected[w] = kernels::project_forward_batch(
            std::span(lat).subspan(s.begin, s.size()), std::span(lon).subspan(s.begin, s.size()),
            std::span(xs).subspan(s.begin, s.size()), std::span(ys).subspan(s.begin, s.size()));
    });
    result.timing.t_transform = clock.lap();

    // Spatial join: arithmetic binning plus per-worker group-by.
    std::vector<std::int64_t> cells(n);
    std::vector<SortedCells> partials(workers);
    run_workers(workers, [&](unsigned w) {
        const Slice s = slices[w];
        const auto slice_cells = std::span(cells).subspan(s.begin, s.size());
        kernels::bin_batch(std::span<const double>(xs).subspan(s.begin, s.size()),
                           std::span<const double>(ys).subspan(s.begin, s.size()), spec,
                           slice_cells);
        partials[w] = group_by_cell(slice_cells, points.subspan(s.begin, s.size()),
                                    spec.cell_count());
    });
    for (unsigned w = 1; w < workers; ++w) {
        partials[0] = merge_sorted(partials[0], partials[w]);
        partials[w] = SortedCells{};
    }
    result.timing.t_spatial_join = clock.lap();

    result.raster = finalize(std::span<const CellEntry>(partials[0]), spec);
    result.timing.t_rasterize = clock.lap();
    result.timing.close_total();

    for (unsigned w = 0; w < workers; ++w) result.skipped_projection += rejected[w];
    for (const CellEntry& e : partials[0]) result.n_binned += e.agg.count;
    result.skipped_outside = n - result.n_binned - result.skipped_projection;
    return result;
}

}  // namespace trajraster
