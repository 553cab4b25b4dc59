#include "trajraster/kernels.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mercator.h"

namespace trajraster::kernels {

namespace {

Isa probe_isa() noexcept {
#if TRAJRASTER_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
    if (__builtin_cpu_supports("avx2")) return Isa::kAvx2;
#endif
    return Isa::kScalar;
}

std::atomic<Isa>& active() noexcept {
    static std::atomic<Isa> isa{probe_isa()};
    return isa;
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": span size mismatch");
}

}  // namespace

Isa detected_isa() noexcept {
    static const Isa isa = probe_isa();
    return isa;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) {
        throw std::invalid_argument("AVX2 kernels are not supported on this CPU");
    }
    active().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::kAvx2:
            return "avx2";
        case Isa::kScalar:
            break;
    }
    return "scalar";
}

namespace scalar {

std::size_t project_forward_batch(std::span<const double> lat, std::span<const double> lon,
                                  std::span<double> x, std::span<double> y) {
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (detail::projectable(lat[i], lon[i])) {
            x[i] = detail::mercator_x(lon[i]);
            y[i] = detail::mercator_y(lat[i]);
        } else {
            x[i] = std::numeric_limits<double>::quiet_NaN();
            y[i] = std::numeric_limits<double>::quiet_NaN();
            ++rejected;
        }
    }
    return rejected;
}

void bin_batch(std::span<const double> x, std::span<const double> y, const GridSpec& spec,
               std::span<std::int64_t> cells) {
    for (std::size_t i = 0; i < x.size(); ++i) cells[i] = bin_point_linear(x[i], y[i], spec);
}

void finalize_speed_bands(std::span<const double> sum, std::span<const double> valid,
                          std::span<const double> max, double nodata,
                          std::span<double> mean_out, std::span<double> max_out) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
        if (valid[i] > 0.0) {
            const double mean = sum[i] / valid[i];
            mean_out[i] = mean > max[i] ? max[i] : mean;
            max_out[i] = max[i];
        } else {
            mean_out[i] = nodata;
            max_out[i] = nodata;
        }
    }
}

DiffReport diff_bands(std::span<const double> a, std::span<const double> b, double nodata) {
    DiffReport report;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] != b[i])) continue;
        ++report.n_differing_cells;
        const bool a_nodata = a[i] == nodata;
        const bool b_nodata = b[i] == nodata;
        const double d = (a_nodata != b_nodata) ? std::numeric_limits<double>::infinity()
                                                : std::abs(a[i] - b[i]);
        report.max_abs_diff = report.max_abs_diff < d ? d : report.max_abs_diff;
    }
    return report;
}

}  // namespace scalar

std::size_t project_forward_batch(std::span<const double> lat, std::span<const double> lon,
                                  std::span<double> x, std::span<double> y) {
    check_sizes(lat.size(), lon.size(), "project_forward_batch");
    check_sizes(lat.size(), x.size(), "project_forward_batch");
    check_sizes(lat.size(), y.size(), "project_forward_batch");
#if TRAJRASTER_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::kAvx2) return avx2::project_forward_batch(lat, lon, x, y);
#endif
    return scalar::project_forward_batch(lat, lon, x, y);
}

void bin_batch(std::span<const double> x, std::span<const double> y, const GridSpec& spec,
               std::span<std::int64_t> cells) {
    check_sizes(x.size(), y.size(), "bin_batch");
    check_sizes(x.size(), cells.size(), "bin_batch");
#if TRAJRASTER_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::kAvx2) return avx2::bin_batch(x, y, spec, cells);
#endif
    scalar::bin_batch(x, y, spec, cells);
}

void finalize_speed_bands(std::span<const double> sum, std::span<const double> valid,
                          std::span<const double> max, double nodata,
                          std::span<double> mean_out, std::span<double> max_out) {
    check_sizes(sum.size(), valid.size(), "finalize_speed_bands");
    check_sizes(sum.size(), max.size(), "finalize_speed_bands");
    check_sizes(sum.size(), mean_out.size(), "finalize_speed_bands");
    check_sizes(sum.size(), max_out.size(), "finalize_speed_bands");
#if TRAJRASTER_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::kAvx2) {
        return avx2::finalize_speed_bands(sum, valid, max, nodata, mean_out, max_out);
    }
#endif
    scalar::finalize_speed_bands(sum, valid, max, nodata, mean_out, max_out);
}

DiffReport diff_bands(std::span<const double> a, std::span<const double> b, double nodata) {
    check_sizes(a.size(), b.size(), "diff_bands");
#if TRAJRASTER_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::kAvx2) return avx2::diff_bands(a, b, nodata);
#endif
    return scalar::diff_bands(a, b, nodata);
}

}  // namespace trajraster::kernels
