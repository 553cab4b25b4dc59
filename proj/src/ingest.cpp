#include "trajraster/ingest.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>

#include "text.h"

namespace trajraster {

// ---------------------------------------------------------------------------
// CSV reading

CsvFixReader::CsvFixReader(std::istream& in) : in_(in) {
    if (!in_.good() || !std::getline(in_, buffer_)) {
        throw ParseError("cannot read CSV header");
    }
    ++line_;
    std::string_view header = buffer_;
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    if (!header.empty() && header.back() == '\r') header.remove_suffix(1);

    text::split(header, ',', fields_);
    for (int i = 0; i < static_cast<int>(fields_.size()); ++i) {
        const std::string name = text::lower(text::unquote(fields_[static_cast<std::size_t>(i)]));
        int* slot = nullptr;
        if (name == "id") slot = &id_col_;
        else if (name == "timestamp") slot = &ts_col_;
        else if (name == "latitude") slot = &lat_col_;
        else if (name == "longitude") slot = &lon_col_;
        else if (name == "speed") slot = &speed_col_;
        if (slot != nullptr && *slot < 0) *slot = i;
    }

    std::string missing;
    if (id_col_ < 0) missing += " id";
    if (ts_col_ < 0) missing += " timestamp";
    if (lat_col_ < 0) missing += " latitude";
    if (lon_col_ < 0) missing += " longitude";
    if (!missing.empty()) throw ParseError("CSV header is missing required column(s):" + missing);
}

bool CsvFixReader::parse_row(std::string_view line, RawFix& out) {
    text::split(line, ',', fields_);
    const int needed = std::max({id_col_, ts_col_, lat_col_, lon_col_, speed_col_});
    if (static_cast<int>(fields_.size()) <= needed) return false;
    auto field = [&](int col) { return fields_[static_cast<std::size_t>(col)]; };

    const std::string_view id = text::unquote(field(id_col_));
    if (id.empty()) return false;
    double ts = 0.0;
    double lat = 0.0;
    double lon = 0.0;
    if (!text::parse_double(text::unquote(field(ts_col_)), ts) || !std::isfinite(ts)) return false;
    if (!text::parse_double(text::unquote(field(lat_col_)), lat)) return false;
    if (!text::parse_double(text::unquote(field(lon_col_)), lon)) return false;
    const geo::GeoCoord coord{lat, lon};
    if (!geo::is_valid(coord)) return false;

    std::optional<double> speed;
    if (speed_col_ >= 0) {
        const std::string_view raw = text::unquote(field(speed_col_));
        if (!raw.empty()) {
            double v = 0.0;
            if (!text::parse_double(raw, v)) return false;
            if (v != kNodata && (!std::isfinite(v) || v < 0.0)) return false;
            speed = v;
        }
    }

    out.trajectory_id.assign(id);
    out.timestamp = ts;
    out.coord = coord;
    out.given_speed = speed;
    return true;
}

bool CsvFixReader::next(RawFix& out) {
    while (std::getline(in_, buffer_)) {
        ++line_;
        std::string_view line = buffer_;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty()) continue;
        if (parse_row(line, out)) return true;
        ++skipped_;
    }
    if (in_.bad()) throw ParseError("read error at line " + std::to_string(line_));
    return false;
}

ParseResult parse_csv(std::istream& in) {
    CsvFixReader reader(in);
    ParseResult result;
    RawFix fix;
    while (reader.next(fix)) result.fixes.push_back(fix);
    result.skipped = reader.skipped();
    return result;
}

// ---------------------------------------------------------------------------
// Speed derivation

namespace {

struct SequencedFix {
    RawFix fix;
    std::uint64_t seq = 0;
};

bool fix_order(const RawFix& a, std::uint64_t seq_a, const RawFix& b, std::uint64_t seq_b) {
    if (const int c = a.trajectory_id.compare(b.trajectory_id); c != 0) return c < 0;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return seq_a < seq_b;
}

bool operator<(const SequencedFix& a, const SequencedFix& b) {
    return fix_order(a.fix, a.seq, b.fix, b.seq);
}

// Consumes fixes in (id, timestamp, seq) order.
class SpeedDeriver {
public:
    TrajectoryPoint next(const RawFix& fix) {
        TrajectoryPoint point{fix, kNodata};
        const bool same_track = has_prev_ && prev_id_ == fix.trajectory_id;
        if (fix.given_speed) {
            point.speed = *fix.given_speed;
        } else if (same_track && fix.timestamp - prev_ts_ > 0.0) {
            point.speed = geo::geodesic_distance(prev_coord_, fix.coord) / (fix.timestamp - prev_ts_);
        }
        has_prev_ = true;
        if (!same_track) prev_id_ = fix.trajectory_id;
        prev_ts_ = fix.timestamp;
        prev_coord_ = fix.coord;
        return point;
    }

private:
    bool has_prev_ = false;
    std::string prev_id_;
    double prev_ts_ = 0.0;
    geo::GeoCoord prev_coord_;
};

// Binary run file of SequencedFix records, deleted on destruction.
class RunFile {
public:
    explicit RunFile(std::filesystem::path path) : path_(std::move(path)) {}
    RunFile(const RunFile&) = delete;
    RunFile& operator=(const RunFile&) = delete;
    ~RunFile() {
        in_.close();
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }

    void write(std::span<const SequencedFix> records) {
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot create sort run file " + path_.string());
        for (const auto& r : records) {
            const auto len = static_cast<std::uint32_t>(r.fix.trajectory_id.size());
            put(out, len);
            out.write(r.fix.trajectory_id.data(), len);
            put(out, r.seq);
            put(out, r.fix.timestamp);
            put(out, r.fix.coord.lat);
            put(out, r.fix.coord.lon);
            const std::uint8_t has_speed = r.fix.given_speed ? 1 : 0;
            put(out, has_speed);
            put(out, r.fix.given_speed.value_or(0.0));
        }
        if (!out) throw ParseError("failed writing sort run file " + path_.string());
    }

    void open() {
        in_.open(path_, std::ios::binary);
        if (!in_) throw ParseError("cannot reopen sort run file " + path_.string());
    }

    bool read(SequencedFix& r) {
        std::uint32_t len = 0;
        if (!get(len)) return false;
        r.fix.trajectory_id.resize(len);
        in_.read(r.fix.trajectory_id.data(), len);
        std::uint8_t has_speed = 0;
        double speed = 0.0;
        if (!get(r.seq) || !get(r.fix.timestamp) || !get(r.fix.coord.lat) ||
            !get(r.fix.coord.lon) || !get(has_speed) || !get(speed)) {
            throw ParseError("truncated sort run file " + path_.string());
        }
        r.fix.given_speed = has_speed ? std::optional<double>(speed) : std::nullopt;
        return true;
    }

private:
    template <typename T>
    static void put(std::ofstream& out, const T& v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <typename T>
    bool get(T& v) {
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        return static_cast<std::size_t>(in_.gcount()) == sizeof(T);
    }

    std::filesystem::path path_;
    std::ifstream in_;
};

std::filesystem::path run_path(const std::filesystem::path& dir, std::size_t index) {
    static std::atomic<std::uint64_t> counter{0};
    static const std::uint64_t salt = std::random_device{}();
    const std::filesystem::path base = dir.empty() ? std::filesystem::temp_directory_path() : dir;
    return base / ("trajraster-run-" + std::to_string(salt) + "-" +
                   std::to_string(counter.fetch_add(1)) + "-" + std::to_string(index) + ".bin");
}

}  // namespace

std::vector<TrajectoryPoint> derive_speeds(std::span<const RawFix> fixes) {
    std::vector<std::uint32_t> order(fixes.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return fix_order(fixes[a], a, fixes[b], b);
    });

    std::vector<TrajectoryPoint> points;
    points.reserve(fixes.size());
    SpeedDeriver deriver;
    for (const std::uint32_t i : order) points.push_back(deriver.next(fixes[i]));
    return points;
}

StreamStats derive_speeds_streaming(std::istream& in, const ExternalSortOptions& options,
                                    const std::function<void(TrajectoryPoint&&)>& sink) {
    const std::size_t limit = std::max<std::size_t>(1, options.max_in_memory_rows);
    CsvFixReader reader(in);
    StreamStats stats;

    std::vector<SequencedFix> buffer;
    std::vector<std::unique_ptr<RunFile>> runs;
    SequencedFix record;
    std::uint64_t seq = 0;

    auto spill = [&] {
        std::sort(buffer.begin(), buffer.end());
        auto run = std::make_unique<RunFile>(run_path(options.temp_dir, runs.size()));
        run->write(buffer);
        runs.push_back(std::move(run));
        buffer.clear();
    };

    while (reader.next(record.fix)) {
        record.seq = seq++;
        buffer.push_back(record);
        if (buffer.size() >= limit) spill();
    }
    stats.rows = seq;
    stats.skipped = reader.skipped();

    SpeedDeriver deriver;
    if (runs.empty()) {
        std::sort(buffer.begin(), buffer.end());
        for (const auto& r : buffer) sink(deriver.next(r.fix));
        return stats;
    }
    if (!buffer.empty()) spill();
    stats.spilled_runs = runs.size();

    std::vector<SequencedFix> heads(runs.size());
    auto greater = [&](std::size_t a, std::size_t b) { return heads[b] < heads[a]; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> queue(greater);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        runs[i]->open();
        if (runs[i]->read(heads[i])) queue.push(i);
    }
    while (!queue.empty()) {
        const std::size_t i = queue.top();
        queue.pop();
        sink(deriver.next(heads[i].fix));
        if (runs[i]->read(heads[i])) queue.push(i);
    }
    return stats;
}

// ---------------------------------------------------------------------------

std::vector<TrajectoryPoint> filter_bbox(std::span<const TrajectoryPoint> points,
                                         const GridSpec& spec) {
    std::vector<TrajectoryPoint> kept;
    for (const auto& p : points) {
        if (!geo::in_projection_band(p.fix.coord)) continue;
        const geo::ProjCoord xy = geo::project_forward_unchecked(p.fix.coord);
        if (bin_point(xy.x, xy.y, spec)) kept.push_back(p);
    }
    return kept;
}

void write_csv(std::ostream& out, std::span<const TrajectoryPoint> points, bool with_speed) {
    std::string line = with_speed ? "id,timestamp,latitude,longitude,speed\n"
                                  : "id,timestamp,latitude,longitude\n";
    out << line;
    for (const auto& p : points) {
        line.clear();
        line += p.fix.trajectory_id;
        line += ',';
        text::append_double(line, p.fix.timestamp);
        line += ',';
        text::append_double(line, p.fix.coord.lat);
        line += ',';
        text::append_double(line, p.fix.coord.lon);
        if (with_speed) {
            line += ',';
            text::append_double(line, p.speed);
        }
        line += '\n';
        out << line;
    }
}

}  // namespace trajraster
