#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
//
// The public functions dispatch on the ISA picked at startup (or forced via
// set_active_isa). Both variants produce bit-identical output; the scalar
// namespace is the reference the AVX2 code is tested against.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "trajraster/grid.h"

namespace trajraster::kernels {

enum class Isa { kScalar, kAvx2 };

/// Best ISA this CPU and build support.
Isa detected_isa() noexcept;
Isa active_isa() noexcept;
/// Throws std::invalid_argument if `isa` is not supported here.
void set_active_isa(Isa isa);
std::string_view isa_name(Isa isa) noexcept;

struct DiffReport {
    std::int64_t n_differing_cells = 0;
    double max_abs_diff = 0.0;

    bool operator==(const DiffReport&) const = default;
};

// Projects lat/lon degrees to pseudo-Mercator. Entries outside the
// projection guard band (or with |lon| > 180, or NaN) get NaN in both
// outputs. Returns the number of such entries.
std::size_t project_forward_batch(std::span<const double> lat, std::span<const double> lon,
                                  std::span<double> x, std::span<double> y);

// Row-major cell index per point, -1 for out-of-bounds or NaN input.
void bin_batch(std::span<const double> x, std::span<const double> y, const GridSpec& spec,
               std::span<std::int64_t> cells);

// mean = min(sum/valid, max) and max where valid > 0, nodata elsewhere.
void finalize_speed_bands(std::span<const double> sum, std::span<const double> valid,
                          std::span<const double> max, double nodata,
                          std::span<double> mean_out, std::span<double> max_out);

// Cell-wise comparison. nodata==nodata is equal; nodata vs value differs
// with infinite difference.
DiffReport diff_bands(std::span<const double> a, std::span<const double> b, double nodata);

namespace scalar {
std::size_t project_forward_batch(std::span<const double> lat, std::span<const double> lon,
                                  std::span<double> x, std::span<double> y);
void bin_batch(std::span<const double> x, std::span<const double> y, const GridSpec& spec,
               std::span<std::int64_t> cells);
void finalize_speed_bands(std::span<const double> sum, std::span<const double> valid,
                          std::span<const double> max, double nodata,
                          std::span<double> mean_out, std::span<double> max_out);
DiffReport diff_bands(std::span<const double> a, std::span<const double> b, double nodata);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define TRAJRASTER_HAVE_AVX2_KERNELS 1
// Only call these when detected_isa() == Isa::kAvx2.
namespace avx2 {
std::size_t project_forward_batch(std::span<const double> lat, std::span<const double> lon,
                                  std::span<double> x, std::span<double> y);
void bin_batch(std::span<const double> x, std::span<const double> y, const GridSpec& spec,
               std::span<std::int64_t> cells);
void finalize_speed_bands(std::span<const double> sum, std::span<const double> valid,
                          std::span<const double> max, double nodata,
                          std::span<double> mean_out, std::span<double> max_out);
DiffReport diff_bands(std::span<const double> a, std::span<const double> b, double nodata);
}  // namespace avx2
#else
#define TRAJRASTER_HAVE_AVX2_KERNELS 0
#endif

}  // namespace trajraster::kernels
