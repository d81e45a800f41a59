#include <cstdlib>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "pcdrift/pipeline.hpp"
#include "support.hpp"

using namespace pcdrift;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

const std::string fixture = std::string(PCDRIFT_DATA_DIR) + "/two_regime.csv";

ConfigParse parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "t.conf");
}

RunConfig fixture_config(const fs::path& out) {
    RunConfig c;
    c.input_path = fixture;
    c.output_dir = out.string();
    c.window = 200;
    c.components = 4;
    return c;
}

/// Relative path -> contents, with timestamp lines of run.log removed.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root).string();
        std::string text = ts::read_file(e.path());
        if (rel == "run.log") {
            std::istringstream in(text);
            std::string line, kept;
            while (std::getline(in, line))
                if (line.rfind("started_at=", 0) != 0 && line.rfind("finished_at=", 0) != 0) kept += line + '\n';
            text = kept;
        }
        out[rel] = text;
    }
    return out;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(PCDRIFT_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
    const auto p = parse(
        "# comment\n"
        "input_path = prices.csv\n"
        "output_dir = out   # trailing comment\n"
        "window = auto\n"
        "window_candidates = 50, 100\n"
        "components = 3\n"
        "order_basis = input_order\n"
        "cumulative_thresholds = 70,80\n"
        "drop_first_window = true\n");
    EXPECT_TRUE(p.diagnostics.empty()) << p.diagnostics.front();
    EXPECT_EQ(p.config.input_path, "prices.csv");
    EXPECT_EQ(p.config.output_dir, "out");
    EXPECT_FALSE(p.config.window.has_value());
    EXPECT_EQ(p.config.window_candidates, (std::vector<std::size_t>{50, 100}));
    EXPECT_EQ(p.config.components, 3);
    EXPECT_EQ(p.config.order_basis, OrderBasis::input_order);
    EXPECT_EQ(p.config.cumulative_thresholds, (std::vector<double>{70, 80}));
    EXPECT_TRUE(p.config.drop_first_window);
    EXPECT_TRUE(check_config(p.config).empty());
}

TEST(Config, Diagnostics) {
    auto p = parse("input_path = a\noutput_dir = b\ncomponents = 0\n");
    auto d = check_config(p.config);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0], "components must be ≥ 1");

    p = parse("input_path = a\noutput_dir = b\ncumulative_thresholds = 150\n");
    d = check_config(p.config);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0], "cumulative threshold 150 out of range (0, 100]");

    p = parse("bogus = 1\nwindow = -3\nreturns_kind = weird\nnot a pair\n");
    EXPECT_EQ(p.diagnostics.size(), 4u);
    EXPECT_NE(p.diagnostics[0].find("t.conf:1: unknown key 'bogus'"), std::string::npos);
    EXPECT_NE(p.diagnostics[3].find("t.conf:4: expected key = value"), std::string::npos);
}

TEST(Config, ValidateFile) {
    const auto dir = ts::temp_dir("validate");
    const auto good = ts::write_file(dir / "good.conf", "input_path = x.csv\noutput_dir = out\n");
    const auto bad = ts::write_file(dir / "bad.conf", "input_path = x.csv\noutput_dir = out\ncomponents = 0\n");
    EXPECT_TRUE(validate(good).empty());
    EXPECT_EQ(validate(bad).size(), 1u);
    EXPECT_THROW(validate((dir / "missing.conf").string()), ConfigError);
}

TEST(Config, EchoRoundTrips) {
    RunConfig c;
    c.input_path = "a.csv";
    c.output_dir = "o";
    c.window = 120;
    c.kaiser_cutoffs = {1.0, 0.7, 0.25};
    c.value_clip = 0.3;
    const auto p = parse(echo_config(c));
    EXPECT_TRUE(p.diagnostics.empty()) << p.diagnostics.front();
    EXPECT_EQ(echo_config(p.config), echo_config(c));
}

TEST(Pipeline, RunsOnFixture) {
    const auto out = ts::temp_dir("run_fixture");
    const auto summary = run(fixture_config(out));
    EXPECT_EQ(summary.series_length, 2000u);
    EXPECT_EQ(summary.variables, 8u);
    EXPECT_EQ(summary.window, 200u);
    EXPECT_EQ(summary.windows, 1801u);
    for (const char* f : {"manifest.txt", "retention.txt", "scree.csv", "log_scree.csv", "run.log",
                          "sweep/manifest.txt", "sweep/eigenvalues.f64", "sweep/pc04.f64", "heatmaps/pc01.ppm",
                          "heatmaps/pc04.ppm.txt", "tracks/pc02.csv", "angles/pc03.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    EXPECT_FALSE(fs::exists(out / "heatmaps/pc05.ppm"));
    EXPECT_FALSE(fs::exists(out / "INCOMPLETE"));
    EXPECT_FALSE(fs::exists(out / "kmo_search.csv"));
    const auto loaded = load_sweep(out / "sweep");
    EXPECT_EQ(loaded.window_count(), 1801u);
    EXPECT_EQ(loaded.components(), 4u);
    EXPECT_NE(ts::read_file(out / "retention.txt").find("kaiser.1="), std::string::npos);
}

TEST(Pipeline, AutoWindowSearch) {
    const auto out = ts::temp_dir("run_auto");
    auto c = fixture_config(out);
    c.window.reset();
    c.window_candidates = {100, 250};
    c.components = 2;
    const auto summary = run(c);
    ASSERT_TRUE(summary.search.has_value());
    EXPECT_EQ(summary.window, 100u);
    const auto table = ts::read_file(out / "kmo_search.csv");
    EXPECT_EQ(table.rfind("window,windows,not_estimable,min_kmo,selected\n100,1901,0,", 0), 0u) << table;
}

TEST(Pipeline, AutoWindowFailureLeavesTableAndMarker) {
    const auto out = ts::temp_dir("run_auto_fail");
    auto c = fixture_config(out);
    c.window.reset();
    c.window_candidates = {4, 6};  // shorter than N = 8: never estimable
    EXPECT_THROW(run(c), NumericalError);
    EXPECT_TRUE(fs::exists(out / "kmo_search.csv"));
    EXPECT_TRUE(fs::exists(out / "INCOMPLETE"));
    EXPECT_FALSE(fs::exists(out / "sweep"));
}

TEST(Pipeline, RerunClearsStaleOutputs) {
    const auto out = ts::temp_dir("run_stale");
    auto c = fixture_config(out);
    c.window.reset();
    c.window_candidates = {4};
    EXPECT_THROW(run(c), NumericalError);
    c = fixture_config(out);
    c.components = 1;
    run(c);
    EXPECT_FALSE(fs::exists(out / "INCOMPLETE"));
    EXPECT_FALSE(fs::exists(out / "kmo_search.csv"));
}

TEST(Pipeline, ByteIdenticalAcrossWorkerCounts) {
    const auto a = ts::temp_dir("run_w1");
    const auto b = ts::temp_dir("run_w8");
    auto ca = fixture_config(a);
    auto cb = fixture_config(b);
    cb.output_dir = ca.output_dir;  // same echoed config
    run(ca, {1});
    const auto first = snapshot(a);
    run(cb, {8});
    const auto second = snapshot(a);
    EXPECT_EQ(first.size(), second.size());
    EXPECT_TRUE(first == second);
}

TEST(Pipeline, MissingInputIsDataError) {
    const auto out = ts::temp_dir("run_missing");
    auto c = fixture_config(out);
    c.input_path = (out / "nope.csv").string();
    EXPECT_THROW(run(c), DataError);
    EXPECT_TRUE(fs::exists(out / "INCOMPLETE"));
}

TEST(Cli, ExitCodes) {
    const auto dir = ts::temp_dir("cli");
    const auto good = ts::write_file(dir / "good.conf", "input_path = " + fixture + "\noutput_dir = " +
                                                            (dir / "out").string() +
                                                            "\nwindow = 300\ncomponents = 2\n");
    const auto bad = ts::write_file(dir / "bad.conf", "input_path = x\noutput_dir = y\ncomponents = 0\n");
    const auto nodata = ts::write_file(dir / "nodata.conf", "input_path = " + (dir / "none.csv").string() +
                                                                "\noutput_dir = " + (dir / "o2").string() + "\n");
    const auto nowin = ts::write_file(dir / "nowin.conf", "input_path = " + fixture + "\noutput_dir = " +
                                                              (dir / "o3").string() +
                                                              "\nwindow = auto\nwindow_candidates = 5\n");
    EXPECT_EQ(cli("validate " + good), 0);
    EXPECT_EQ(cli("validate " + bad), 1);
    EXPECT_EQ(cli("run " + bad), 1);
    EXPECT_EQ(cli("run " + good + " --workers 2"), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "heatmaps" / "pc02.ppm"));
    EXPECT_EQ(cli("run " + good + " --components 0"), 1);
    EXPECT_EQ(cli("run " + nodata), 2);
    EXPECT_EQ(cli("run " + nowin), 3);
    EXPECT_TRUE(fs::exists(dir / "o3" / "kmo_search.csv"));
    EXPECT_EQ(cli("frobnicate"), 1);
}
