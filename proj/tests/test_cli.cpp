#include "commands.h"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.h"
#include "trajraster/ingest.h"
#include "trajraster/raster_io.h"

using namespace trajraster;
namespace fs = std::filesystem;

namespace {

const fs::path kData = TRAJRASTER_TEST_DATA;
const std::string kFixture = (kData / "three_points.csv").string();

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        std::random_device rd;
        dir_ = fs::temp_directory_path() / ("trajraster_cli_" + std::to_string(rd()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    Invocation rasterize(const std::string& prefix, const std::string& engine = "direct") {
        return invoke({"rasterize", "--input", kFixture, "--origin", "-8195500", "5707500", "--size",
                    "2", "2", "--engine", engine, "--workers", "2", "--out", path(prefix)});
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GoldenFixtureAgreesWithBruteForce) {
    std::ifstream in(kFixture);
    const auto parsed = parse_csv(in);
    const auto pts = derive_speeds(parsed.fixes);
    const GridSpec spec{-8195500.0, 5707500.0, 5.0, 2, 2};
    const auto want = oracle::brute_force(pts, spec);
    for (const auto& [suffix, values] :
         {std::pair{"_speed_avg", want.mean}, std::pair{"_speed_max", want.max}}) {
        std::ifstream g(kData / (std::string("three_points") + suffix + ".asc"));
        EXPECT_EQ(read_ascii_grid(g).values.values, values) << suffix;
    }
    std::ifstream g(kData / "three_points_count.asc");
    const auto counts = read_ascii_grid(g).values.values;
    for (std::size_t i = 0; i < counts.size(); ++i) EXPECT_EQ(counts[i], want.count[i]);
}

TEST_F(CliTest, RasterizeMatchesGoldenFiles) {
    for (const std::string engine : {"direct", "vectorgrid"}) {
        const Invocation r = rasterize(engine, engine);
        ASSERT_EQ(r.code, cli::kOk) << r.err;
        for (const char* suffix : {"_count.asc", "_speed_avg.asc", "_speed_max.asc"}) {
            EXPECT_EQ(slurp(path(engine + suffix)), slurp(kData / (std::string("three_points") + suffix)))
                << engine << suffix;
        }
        // Exactly one CSV line of six timings.
        EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
        EXPECT_EQ(std::count(r.out.begin(), r.out.end(), ','), 5);
    }
}

TEST_F(CliTest, RasterizeExtentKm) {
    const Invocation r = invoke({"rasterize", "--input", kFixture, "--origin", "-8195500", "5707500",
                       "--extent-km", "0.012", "0.01", "--out", path("ext")});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    std::ifstream in(path("ext_count.asc"));
    const auto g = read_ascii_grid(in);
    EXPECT_EQ(g.header.n_cols, 3);
    EXPECT_EQ(g.header.n_rows, 2);
}

TEST_F(CliTest, RasterizeConfigErrors) {
    Invocation r = invoke({"rasterize", "--origin", "0", "0", "--size", "2", "2", "--out", path("x")});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("--input"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;

    r = invoke({"rasterize", "--input", kFixture, "--origin", "0", "0", "--out", path("x")});
    EXPECT_EQ(r.code, cli::kConfigError);
    r = invoke({"rasterize", "--input", kFixture, "--origin", "0", "0", "--size", "2", "2",
             "--extent-km", "1", "1", "--out", path("x")});
    EXPECT_EQ(r.code, cli::kConfigError);
    r = invoke({"rasterize", "--input", kFixture, "--origin", "0", "0", "--size", "2", "2",
             "--engine", "sparse", "--out", path("x")});
    EXPECT_EQ(r.code, cli::kConfigError);
    r = invoke({"rasterize", "--input", kFixture, "--origin", "0", "0", "--size", "0", "2",
             "--out", path("x")});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_EQ(invoke({}).code, cli::kConfigError);
}

TEST_F(CliTest, RasterizeIoErrors) {
    Invocation r = invoke({"rasterize", "--input", path("missing.csv"), "--origin", "0", "0", "--size", "2",
                 "2", "--out", path("x")});
    EXPECT_EQ(r.code, cli::kIoError);
    r = invoke({"rasterize", "--input", kFixture, "--origin", "0", "0", "--size", "2", "2", "--out",
             path("no/such/dir/x")});
    EXPECT_EQ(r.code, cli::kIoError);
}

TEST_F(CliTest, VectorGridOverCapExitsThree) {
    const Invocation r = invoke({"rasterize", "--input", kFixture, "--origin", "-8195500", "5707500",
                       "--size", "2000", "1000", "--engine", "vectorgrid", "--max-cells",
                       "1000000", "--out", path("cap")});
    EXPECT_EQ(r.code, cli::kMemoryBudget);
    EXPECT_NE(r.err.find("cell"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("cap_count.asc")));
}

TEST_F(CliTest, CompareIdenticalAndPerturbed) {
    ASSERT_EQ(rasterize("a").code, cli::kOk);
    ASSERT_EQ(rasterize("b", "vectorgrid").code, cli::kOk);
    Invocation r = invoke({"compare", path("a"), path("b")});
    EXPECT_EQ(r.code, cli::kOk) << r.out << r.err;
    EXPECT_EQ(r.out, "IDENTICAL\n");

    {
        std::ofstream f(path("b_speed_max.asc"), std::ios::trunc);
        f << "ncols 2\nnrows 2\nxllcorner -8195500\nyllcorner 5707490\ncellsize 5\n"
             "NODATA_value -9999\n6 -9999\n-9999 10.5\n";
    }
    r = invoke({"compare", path("a"), path("b")});
    EXPECT_EQ(r.code, cli::kRastersDiffer);
    EXPECT_NE(r.out.find("speed_max: n_differing_cells=1 max_abs_diff=0.5"), std::string::npos)
        << r.out;
    EXPECT_NE(r.out.find("count: n_differing_cells=0"), std::string::npos) << r.out;
}

TEST_F(CliTest, CompareErrors) {
    ASSERT_EQ(rasterize("a").code, cli::kOk);
    ASSERT_EQ(invoke({"rasterize", "--input", kFixture, "--origin", "-8195500", "5707500", "--size",
                   "3", "2", "--out", path("wide")})
                  .code,
              cli::kOk);
    EXPECT_EQ(invoke({"compare", path("a"), path("wide")}).code, cli::kConfigError);
    EXPECT_EQ(invoke({"compare", path("a"), path("nothing")}).code, cli::kIoError);
    EXPECT_EQ(invoke({"compare", path("a")}).code, cli::kConfigError);
}

TEST_F(CliTest, GenIsReproducible) {
    for (const char* name : {"g1.csv", "g2.csv"}) {
        const Invocation r = invoke({"gen", "--points", "1000", "--seed", "7", "--out", path(name)});
        ASSERT_EQ(r.code, cli::kOk) << r.err;
    }
    const std::string a = slurp(path("g1.csv"));
    EXPECT_EQ(a, slurp(path("g2.csv")));
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1001);
    EXPECT_EQ(a.rfind("id,timestamp,latitude,longitude\n", 0), 0u);

    const Invocation stdout_run = invoke({"gen", "--points", "1000", "--seed", "7"});
    EXPECT_EQ(stdout_run.out, a);
    EXPECT_EQ(invoke({"gen", "--points", "0"}).code, cli::kConfigError);
    EXPECT_EQ(invoke({"gen"}).code, cli::kConfigError);
}

TEST_F(CliTest, GenThenRasterizeBothEnginesIdentical) {
    ASSERT_EQ(invoke({"gen", "--points", "3000", "--seed", "3", "--origin", "-8195500", "5707500",
                   "--size", "60", "40", "--out", path("w.csv")})
                  .code,
              cli::kOk);
    for (const std::string engine : {"direct", "vectorgrid"}) {
        const Invocation r = invoke({"rasterize", "--input", path("w.csv"), "--origin", "-8195500", "5707500",
                           "--size", "60", "40", "--engine", engine, "--sort-buffer-rows", "500",
                           "--out", path(engine)});
        ASSERT_EQ(r.code, cli::kOk) << r.err;
    }
    EXPECT_EQ(invoke({"compare", path("direct"), path("vectorgrid")}).code, cli::kOk);
}

TEST_F(CliTest, BenchUsageAndSmallSweep) {
    Invocation r = invoke({"bench"});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("--preset"), std::string::npos) << r.err;
    EXPECT_EQ(invoke({"bench", "--preset", "nope"}).code, cli::kConfigError);
    EXPECT_EQ(invoke({"bench", "--areas", "0.1", "--points", "500", "--engines", "sparse"}).code,
              cli::kConfigError);

    r = invoke({"bench", "--areas", "0.05,0.1", "--points", "500", "--reps", "2", "--out",
             path("report.csv")});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const std::string report = slurp(path("report.csv"));
    // 2 engines x 2 areas x (2 reps + median) + header
    EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 13);
}

TEST_F(CliTest, HelpExitsZero) {
    const Invocation r = invoke({"--help"});
    EXPECT_EQ(r.code, cli::kOk);
    EXPECT_NE(r.out.find("rasterize"), std::string::npos);
}

TEST_F(CliTest, BinaryExitCodes) {
    const std::string exe = TRAJRASTER_CLI_PATH;
    const std::string quiet = " >/dev/null 2>&1";
    auto status = [](int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; };
    EXPECT_EQ(status(std::system(("\"" + exe + "\" bench" + quiet).c_str())), 1);
    const std::string ok = "\"" + exe + "\" rasterize --input \"" + kFixture +
                           "\" --origin -8195500 5707500 --size 2 2 --out \"" + path("bin") + "\"";
    EXPECT_EQ(status(std::system((ok + quiet).c_str())), 0);
    EXPECT_EQ(slurp(path("bin_count.asc")), slurp(kData / "three_points_count.asc"));
}
