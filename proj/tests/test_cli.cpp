#include "diffcal/cli.hpp"
#include "diffcal/config.hpp"
#include "diffcal/error.hpp"

#include "test_util.hpp"

#include <chrono>
#include <sstream>

using namespace diffcal;
using testutil::slurp;
using testutil::spit;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string p(const fs::path& path) { return path.string(); }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(cli({"--help"}).code, exit_code::ok);
    EXPECT_EQ(cli({}).code, exit_code::config);
    EXPECT_EQ(cli({"frobnicate"}).code, exit_code::config);
    EXPECT_EQ(cli({"simulate"}).code, exit_code::config);
}

TEST(Cli, SmokeGridIsFastAndLoads) {
    testutil::TempDir dir("cli_smoke");
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = cli({"simulate", "-o", p(dir / "ds"), "--cols", "2", "--rows", "2"});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(secs, 1.0);
    const auto ds = load_dataset(dir / "ds");
    EXPECT_TRUE(ds.warnings.empty());
    EXPECT_EQ(ds.patch.size(), 4u);
    EXPECT_TRUE(fs::exists(dir / "ds/effective_config.json"));
}

TEST(Cli, SameSeedSameBytes) {
    testutil::TempDir dir("cli_seed");
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "a"), "--cols", "3", "--rows", "2", "--seed", "9", "--threads", "1"}).code, 0);
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "b"), "--cols", "3", "--rows", "2", "--seed", "9", "--threads", "3"}).code, 0);
    // The echoed config records the output path and thread count, which differ by construction.
    fs::remove(dir / "a/effective_config.json");
    fs::remove(dir / "b/effective_config.json");
    std::string diff;
    EXPECT_TRUE(testutil::same_tree(dir / "a", dir / "b", &diff)) << diff;
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
    testutil::TempDir dir("cli_cfg");
    spit(dir / "sim.json", R"({"grid": {"cols": 3, "rows": 2}, "seed": 5, "scene": {"patch": {"intensity": 3000}}})");
    ASSERT_EQ(cli({"simulate", "--config", p(dir / "sim.json"), "--seed", "8", "-o", p(dir / "ds")}).code, 0);
    const auto echo = nlohmann::json::parse(slurp(dir / "ds/effective_config.json"));
    EXPECT_EQ(echo["seed"], 8);
    EXPECT_EQ(echo["grid"]["cols"], 3);
    EXPECT_EQ(echo["scene"]["patch"]["intensity"], 3000.0);
    EXPECT_EQ(echo["sensor"]["bin_count"], 128);
    EXPECT_EQ(echo["frame"]["width"], 848);

    // The echoed config reproduces the dataset.
    auto replay = echo;
    replay.erase("paths");
    spit(dir / "replay.json", replay.dump());
    ASSERT_EQ(cli({"simulate", "--config", p(dir / "replay.json"), "-o", p(dir / "ds2")}).code, 0);
    fs::remove(dir / "ds/effective_config.json");
    fs::remove(dir / "ds2/effective_config.json");
    EXPECT_TRUE(testutil::same_tree(dir / "ds", dir / "ds2"));

    spit(dir / "bad.json", R"({"grid": {"colz": 3}})");
    const auto bad = cli({"simulate", "--config", p(dir / "bad.json"), "-o", p(dir / "x")});
    EXPECT_EQ(bad.code, exit_code::config);
    EXPECT_NE(bad.err.find("colz"), std::string::npos);
    spit(dir / "typo.json", R"({"seed": "seven"})");
    EXPECT_EQ(cli({"simulate", "--config", p(dir / "typo.json"), "-o", p(dir / "x")}).code, exit_code::config);
    EXPECT_EQ(cli({"simulate", "--noise", "gaussian", "-o", p(dir / "x")}).code, exit_code::config);
}

TEST(Cli, CalibrateCompareRender) {
    testutil::TempDir dir("cli_full");
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "ds"), "--cols", "6", "--rows", "4"}).code, 0);
    const auto cal = cli({"calibrate", p(dir / "ds"), "-o", p(dir / "cal")});
    ASSERT_EQ(cal.code, 0) << cal.err;
    EXPECT_NE(cal.out.find("(auto)"), std::string::npos);
    for (const char* f : {"maps/maps.json", "maps/detections.csv", "maps/pixel_8_support.csv", "overlays/composite.png",
                          "overlays/pixel_0.png", "summary.json", "summary.txt", "effective_config.json"}) {
        EXPECT_TRUE(fs::exists(dir / "cal" / f)) << f;
    }
    const auto summary = nlohmann::json::parse(slurp(dir / "cal/summary.json"));
    EXPECT_EQ(summary["invalid_detections"], 0);
    EXPECT_EQ(summary["peak_responses"].size(), 9u);
    EXPECT_EQ(summary["window_source"], "auto");

    const auto cmp = cli({"compare", p(dir / "cal/maps"), p(dir / "cal/maps"), "-o", p(dir / "cmp")});
    ASSERT_EQ(cmp.code, 0) << cmp.err;
    EXPECT_NE(cmp.out.find("iou 1 +/- 0"), std::string::npos);
    EXPECT_NE(cmp.out.find("centroid_displacement_px 0 +/- 0"), std::string::npos);
    EXPECT_NE(cmp.out.find("cosine 1 +/- 0"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "cmp/report.csv"));

    const auto base = p(dir / "ds/bg_frames/000000.png");
    ASSERT_EQ(cli({"render", p(dir / "cal/maps"), "--base", base, "-o", p(dir / "r1")}).code, 0);
    ASSERT_EQ(cli({"render", p(dir / "cal/maps"), "--base", base, "-o", p(dir / "r2")}).code, 0);
    for (int i = 0; i < 9; ++i) EXPECT_TRUE(fs::exists(dir / "r1" / ("pixel_" + std::to_string(i) + ".png")));
    EXPECT_TRUE(fs::exists(dir / "r1/composite.png"));
    EXPECT_EQ(slurp(dir / "r1/composite.png"), slurp(dir / "r2/composite.png"));
    EXPECT_EQ(slurp(dir / "r1/pixel_4.png"), slurp(dir / "r2/pixel_4.png"));

    const auto missing = cli({"render", p(dir / "cal/maps"), "--base", p(dir / "nope.png"), "-o", p(dir / "r3")});
    EXPECT_NE(missing.code, 0);
    EXPECT_NE(missing.err.find("nope.png"), std::string::npos);

    const auto win = cli({"calibrate", p(dir / "ds"), "-o", p(dir / "calw"), "--window", "38", "42"});
    ASSERT_EQ(win.code, 0) << win.err;
    EXPECT_NE(win.out.find("window [38, 42] (explicit)"), std::string::npos);
    const auto ws = nlohmann::json::parse(slurp(dir / "calw/summary.json"));
    EXPECT_EQ(ws["window"]["lo"], 38);
    EXPECT_EQ(ws["window_source"], "explicit");
    const auto echo = nlohmann::json::parse(slurp(dir / "calw/effective_config.json"));
    EXPECT_EQ(echo["window"]["hi"], 42);

    // Without noise, a window before the patch return has no signal.
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "quiet"), "--cols", "3", "--rows", "3", "--noise", "none"}).code, 0);
    const auto none = cli({"calibrate", p(dir / "quiet"), "-o", p(dir / "caln"), "--window", "0", "5"});
    EXPECT_EQ(none.code, exit_code::degenerate);
    EXPECT_NE(none.err.find("pixel"), std::string::npos);
}

TEST(Cli, CompareMismatchedGrids) {
    testutil::TempDir dir("cli_mis");
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "a"), "--cols", "4", "--rows", "3"}).code, 0);
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "b"), "--cols", "3", "--rows", "3"}).code, 0);
    ASSERT_EQ(cli({"calibrate", p(dir / "a"), "-o", p(dir / "ca")}).code, 0);
    ASSERT_EQ(cli({"calibrate", p(dir / "b"), "-o", p(dir / "cb")}).code, 0);
    const auto r = cli({"compare", p(dir / "ca/maps"), p(dir / "cb/maps"), "-o", p(dir / "cmp")});
    EXPECT_EQ(r.code, exit_code::validation);
    EXPECT_NE(r.err.find("grid"), std::string::npos);
}

TEST(Cli, BlankedFramesAndValidFraction) {
    testutil::TempDir dir("cli_blank");
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "ds"), "--cols", "5", "--rows", "4"}).code, 0);
    const auto blank = [&](int k) {
        char name[32];
        std::snprintf(name, sizeof name, "%06d.png", k);
        fs::copy_file(dir / "ds/bg_frames" / name, dir / "ds/frames" / name, fs::copy_options::overwrite_existing);
    };
    blank(7);
    auto ok = cli({"calibrate", p(dir / "ds"), "-o", p(dir / "c1")});
    ASSERT_EQ(ok.code, 0) << ok.err;
    EXPECT_NE(ok.out.find("invalid detections: 1 of 20"), std::string::npos);
    const auto dets = slurp(dir / "c1/maps/detections.csv");
    EXPECT_NE(dets.find("\n7,,,,0,0\n"), std::string::npos);

    blank(3);
    blank(12);
    const auto fail = cli({"calibrate", p(dir / "ds"), "-o", p(dir / "c2")});
    EXPECT_EQ(fail.code, exit_code::degenerate);
    EXPECT_NE(fail.err.find("17 of 20"), std::string::npos);
    EXPECT_EQ(cli({"calibrate", p(dir / "ds"), "-o", p(dir / "c3"), "--min-valid-fraction", "0.8"}).code, 0);
}

TEST(Cli, CalibrateRejectsBadDataset) {
    testutil::TempDir dir("cli_bad");
    EXPECT_EQ(cli({"calibrate", p(dir / "nothing"), "-o", p(dir / "c")}).code, exit_code::validation);
    ASSERT_EQ(cli({"simulate", "-o", p(dir / "ds"), "--cols", "2", "--rows", "2"}).code, 0);
    EXPECT_EQ(cli({"calibrate", p(dir / "ds"), "-o", p(dir / "c"), "--rel-threshold", "2"}).code, exit_code::config);
}
