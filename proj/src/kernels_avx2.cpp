// AVX2 variants. This file is compiled with -mavx2; nothing here may run
// before detected_isa() has confirmed support.

#include "trajraster/kernels.h"

#if TRAJRASTER_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <limits>

#include "mercator.h"

namespace trajraster::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

// Exact for integral v in [0, 2^51).
inline __m256i to_int64(__m256d v) {
    const __m256d magic = _mm256_set1_pd(4503599627370496.0);  // 2^52
    return _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(v, magic)),
                            _mm256_castpd_si256(magic));
}

inline __m256d abs_pd(__m256d v) {
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

std::size_t project_forward_batch(std::span<const double> lat, std::span<const double> lon,
                                  std::span<double> x, std::span<double> y) {
    const std::size_t n = lat.size();
    const std::size_t body = n - n % kLanes;
    const __m256d radius = _mm256_set1_pd(geo::kMercatorRadius);
    const __m256d deg_to_rad = _mm256_set1_pd(geo::kDegToRad);
    const __m256d lat_limit = _mm256_set1_pd(geo::kMaxMercatorLatitude);
    const __m256d lon_limit = _mm256_set1_pd(180.0);
    const __m256d nan = _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN());

    std::size_t rejected = 0;
    for (std::size_t i = 0; i < body; i += kLanes) {
        const __m256d vlat = _mm256_loadu_pd(lat.data() + i);
        const __m256d vlon = _mm256_loadu_pd(lon.data() + i);
        const __m256d ok = _mm256_and_pd(_mm256_cmp_pd(abs_pd(vlat), lat_limit, _CMP_LT_OQ),
                                         _mm256_cmp_pd(abs_pd(vlon), lon_limit, _CMP_LE_OQ));
        const int mask = _mm256_movemask_pd(ok);
        rejected += static_cast<std::size_t>(kLanes - std::popcount(static_cast<unsigned>(mask)));

        const __m256d vx = _mm256_mul_pd(radius, _mm256_mul_pd(vlon, deg_to_rad));
        _mm256_storeu_pd(x.data() + i, _mm256_blendv_pd(nan, vx, ok));

        // No vector log/tan in the toolchain; the y term stays per lane.
        alignas(32) double ys[kLanes];
        for (std::size_t k = 0; k < kLanes; ++k) {
            ys[k] = (mask >> k) & 1 ? detail::mercator_y(lat[i + k])
                                    : std::numeric_limits<double>::quiet_NaN();
        }
        _mm256_storeu_pd(y.data() + i, _mm256_load_pd(ys));
    }
    for (std::size_t i = body; i < n; ++i) {
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
    const std::size_t n = x.size();
    const std::size_t body = n - n % kLanes;
    const __m256d ox = _mm256_set1_pd(spec.origin_x);
    const __m256d oy = _mm256_set1_pd(spec.origin_y);
    const __m256d px = _mm256_set1_pd(spec.pixel_size);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d ncols = _mm256_set1_pd(static_cast<double>(spec.n_cols));
    const __m256d nrows = _mm256_set1_pd(static_cast<double>(spec.n_rows));
    const __m256i minus_one = _mm256_set1_epi64x(-1);

    for (std::size_t i = 0; i < body; i += kLanes) {
        const __m256d vx = _mm256_loadu_pd(x.data() + i);
        const __m256d vy = _mm256_loadu_pd(y.data() + i);

        __m256d col = _mm256_floor_pd(_mm256_div_pd(_mm256_sub_pd(vx, ox), px));
        __m256d row = _mm256_floor_pd(_mm256_div_pd(_mm256_sub_pd(oy, vy), px));

        // Same edge snapping as bin_point_linear.
        const __m256d left = _mm256_add_pd(ox, _mm256_mul_pd(col, px));
        const __m256d right = _mm256_add_pd(ox, _mm256_mul_pd(_mm256_add_pd(col, one), px));
        const __m256d col_dec = _mm256_cmp_pd(vx, left, _CMP_LT_OQ);
        const __m256d col_inc = _mm256_andnot_pd(col_dec, _mm256_cmp_pd(vx, right, _CMP_GE_OQ));
        col = _mm256_sub_pd(col, _mm256_and_pd(col_dec, one));
        col = _mm256_add_pd(col, _mm256_and_pd(col_inc, one));

        const __m256d top = _mm256_sub_pd(oy, _mm256_mul_pd(row, px));
        const __m256d bottom = _mm256_sub_pd(oy, _mm256_mul_pd(_mm256_add_pd(row, one), px));
        const __m256d row_dec = _mm256_cmp_pd(vy, top, _CMP_GT_OQ);
        const __m256d row_inc = _mm256_andnot_pd(row_dec, _mm256_cmp_pd(vy, bottom, _CMP_LE_OQ));
        row = _mm256_sub_pd(row, _mm256_and_pd(row_dec, one));
        row = _mm256_add_pd(row, _mm256_and_pd(row_inc, one));

        __m256d inside = _mm256_and_pd(_mm256_cmp_pd(col, zero, _CMP_GE_OQ),
                                       _mm256_cmp_pd(col, ncols, _CMP_LT_OQ));
        inside = _mm256_and_pd(inside, _mm256_cmp_pd(row, zero, _CMP_GE_OQ));
        inside = _mm256_and_pd(inside, _mm256_cmp_pd(row, nrows, _CMP_LT_OQ));

        // row*ncols + col is an exact integer below 2^51 for any in-bounds lane;
        // zero the others before converting.
        const __m256d linear =
            _mm256_and_pd(inside, _mm256_add_pd(_mm256_mul_pd(row, ncols), col));
        const __m256i idx = _mm256_blendv_epi8(minus_one, to_int64(linear),
                                               _mm256_castpd_si256(inside));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(cells.data() + i), idx);
    }
    for (std::size_t i = body; i < n; ++i) cells[i] = bin_point_linear(x[i], y[i], spec);
}

void finalize_speed_bands(std::span<const double> sum, std::span<const double> valid,
                          std::span<const double> max, double nodata,
                          std::span<double> mean_out, std::span<double> max_out) {
    const std::size_t n = sum.size();
    const std::size_t body = n - n % kLanes;
    const __m256d vnodata = _mm256_set1_pd(nodata);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);

    for (std::size_t i = 0; i < body; i += kLanes) {
        const __m256d vsum = _mm256_loadu_pd(sum.data() + i);
        const __m256d vvalid = _mm256_loadu_pd(valid.data() + i);
        const __m256d vmax = _mm256_loadu_pd(max.data() + i);
        const __m256d has = _mm256_cmp_pd(vvalid, zero, _CMP_GT_OQ);
        // Divide by 1 in empty lanes; the result is blended away.
        const __m256d mean = _mm256_div_pd(vsum, _mm256_blendv_pd(one, vvalid, has));
        // min_pd(a, b) == (a < b ? a : b), matching the scalar clamp for non-NaN input.
        const __m256d clamped = _mm256_min_pd(vmax, mean);
        _mm256_storeu_pd(mean_out.data() + i, _mm256_blendv_pd(vnodata, clamped, has));
        _mm256_storeu_pd(max_out.data() + i, _mm256_blendv_pd(vnodata, vmax, has));
    }
    for (std::size_t i = body; i < n; ++i) {
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
    const std::size_t n = a.size();
    const std::size_t body = n - n % kLanes;
    const __m256d vnodata = _mm256_set1_pd(nodata);
    const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());

    DiffReport report;
    __m256d vmax = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += kLanes) {
        const __m256d va = _mm256_loadu_pd(a.data() + i);
        const __m256d vb = _mm256_loadu_pd(b.data() + i);
        const __m256d differ = _mm256_cmp_pd(va, vb, _CMP_NEQ_UQ);
        const int mask = _mm256_movemask_pd(differ);
        if (mask == 0) continue;
        report.n_differing_cells += std::popcount(static_cast<unsigned>(mask));

        const __m256d mismatch = _mm256_xor_pd(_mm256_cmp_pd(va, vnodata, _CMP_EQ_OQ),
                                               _mm256_cmp_pd(vb, vnodata, _CMP_EQ_OQ));
        __m256d d = _mm256_blendv_pd(abs_pd(_mm256_sub_pd(va, vb)), inf, mismatch);
        d = _mm256_and_pd(differ, d);
        // max_pd(d, m) keeps m when d is NaN, like the scalar `m < d ? d : m`.
        vmax = _mm256_max_pd(d, vmax);
    }
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, vmax);
    for (double v : lanes) report.max_abs_diff = report.max_abs_diff < v ? v : report.max_abs_diff;

    for (std::size_t i = body; i < n; ++i) {
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

}  // namespace trajraster::kernels::avx2

#endif  // TRAJRASTER_HAVE_AVX2_KERNELS
