#pragma once

// Trajectory CSV parsing, per-trajectory ordering, speed derivation and
// bounding-box filtering.
//
// Schema: id,timestamp,latitude,longitude[,speed]. Header names are matched
// case-insensitively and extra columns are ignored. Timestamps are epoch
// seconds (integer or decimal). When a speed column is present its value is
// used as-is for that row; an empty cell falls back to derivation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trajraster/geo.h"
#include "trajraster/grid.h"

namespace trajraster {

struct RawFix {
    std::string trajectory_id;
    double timestamp = 0.0;
    geo::GeoCoord coord;
    /// Value of the optional speed column (m/s, or kNodata).
    std::optional<double> given_speed;

    bool operator==(const RawFix&) const = default;
};

struct TrajectoryPoint {
    RawFix fix;
    double speed = kNodata;  // m/s, or kNodata

    bool operator==(const TrajectoryPoint&) const = default;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Streaming row reader. Malformed rows are skipped and counted.
class CsvFixReader {
public:
    /// Reads and validates the header; throws ParseError when a required
    /// column is missing or the stream is unreadable.
    explicit CsvFixReader(std::istream& in);

    /// Next valid fix, or false at end of stream.
    bool next(RawFix& out);

    std::size_t skipped() const noexcept { return skipped_; }
    std::size_t line_number() const noexcept { return line_; }
    bool has_speed_column() const noexcept { return speed_col_ >= 0; }

private:
    bool parse_row(std::string_view line, RawFix& out);

    std::istream& in_;
    int id_col_ = -1;
    int ts_col_ = -1;
    int lat_col_ = -1;
    int lon_col_ = -1;
    int speed_col_ = -1;
    std::size_t skipped_ = 0;
    std::size_t line_ = 0;
    std::string buffer_;
    std::vector<std::string_view> fields_;
};

struct ParseResult {
    std::vector<RawFix> fixes;
    std::size_t skipped = 0;
};

ParseResult parse_csv(std::istream& in);

/// Groups by trajectory id (lexicographic), sorts by timestamp within a group
/// (stable, ties keep input order) and derives speed from the predecessor.
/// First fixes and non-positive time deltas get kNodata.
std::vector<TrajectoryPoint> derive_speeds(std::span<const RawFix> fixes);

struct ExternalSortOptions {
    /// Rows held in memory before spilling a sorted run to disk.
    std::size_t max_in_memory_rows = 10'000'000;
    /// Run files go here; empty means the system temp directory.
    std::filesystem::path temp_dir;
};

struct StreamStats {
    std::size_t rows = 0;
    std::size_t skipped = 0;
    std::size_t spilled_runs = 0;
};

/// Same output order and values as parse_csv + derive_speeds, but memory is
/// bounded by `options.max_in_memory_rows`: larger inputs are sorted in runs
/// on disk and k-way merged. Points are passed to `sink` one at a time.
StreamStats derive_speeds_streaming(std::istream& in, const ExternalSortOptions& options,
                                    const std::function<void(TrajectoryPoint&&)>& sink);

/// Keeps points whose projected position bins inside `spec`, in order.
std::vector<TrajectoryPoint> filter_bbox(std::span<const TrajectoryPoint> points,
                                         const GridSpec& spec);

/// Writes the four-column schema (plus speed when `with_speed`), with
/// shortest round-trip number formatting.
void write_csv(std::ostream& out, std::span<const TrajectoryPoint> points, bool with_speed);

}  // namespace trajraster
