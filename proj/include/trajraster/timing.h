#pragma once

#include <chrono>

namespace trajraster {

/// Per-stage wall-clock durations in seconds.
///
/// t_total covers the engine stages only: transform, grid creation, spatial
/// join and rasterize. t_ingest (reading or generating points) is reported
/// alongside but not included.
struct TimingReport {
    double t_ingest = 0.0;
    double t_transform = 0.0;
    double t_grid_creation = 0.0;
    double t_spatial_join = 0.0;
    double t_rasterize = 0.0;
    double t_total = 0.0;

    void close_total() noexcept {
        t_total = t_transform + t_grid_creation + t_spatial_join + t_rasterize;
    }
};

class Stopwatch {
public:
    using Clock = std::chrono::steady_clock;

    Stopwatch() : start_(Clock::now()) {}

    double elapsed() const noexcept {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }
    /// Returns elapsed seconds and restarts.
    double lap() noexcept {
        const auto now = Clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

private:
    Clock::time_point start_;
};

}  // namespace trajraster
