#include "diffcal/histogram.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <random>

using namespace diffcal;
using testutil::kind_of;

namespace {

HistogramCube cube(std::size_t k, CubeKind kind, std::vector<std::vector<std::uint32_t>> rows) {
    HistogramCube c(rows.size(), rows.front().size(), k, kind);
    for (std::size_t p = 0; p < rows.size(); ++p) {
        for (std::size_t t = 0; t < rows[p].size(); ++t) c.at(p, t) = rows[p][t];
    }
    return c;
}

std::vector<std::uint32_t> padded(std::vector<std::uint32_t> head, std::size_t T) {
    head.resize(T, 0);
    return head;
}

}  // namespace

TEST(PatchResponse, HandExample) {
    const auto h = cube(3, CubeKind::PatchPresent, {padded({0, 5, 9, 2}, 16)});
    const auto bg = cube(3, CubeKind::Background, {padded({0, 1, 4, 7}, 16)});
    EXPECT_EQ(patch_response(h, bg, BinWindow{0, 3}, 0), 5.0);
}

TEST(PatchResponse, IdenticalAndZero) {
    const auto h = cube(0, CubeKind::PatchPresent, {padded({3, 8, 1, 0, 6}, 8)});
    auto bg = h;
    bg.kind = CubeKind::Background;
    EXPECT_EQ(patch_response(h, bg, BinWindow{0, 7}, 0), 0.0);

    const auto zero = cube(0, CubeKind::PatchPresent, {std::vector<std::uint32_t>(8, 0)});
    EXPECT_EQ(patch_response(zero, bg, BinWindow{0, 7}, 0), 0.0);
}

TEST(PatchResponse, AllNegativeClipsToZero) {
    const auto h = cube(0, CubeKind::PatchPresent, {{1, 1, 1, 1}});
    const auto bg = cube(0, CubeKind::Background, {{5, 5, 5, 5}});
    EXPECT_EQ(patch_response(h, bg, BinWindow{0, 3}, 0), 0.0);
}

TEST(PatchResponse, PicksRequestedPixel) {
    const auto h = cube(0, CubeKind::PatchPresent, {{0, 2, 0}, {0, 9, 0}});
    const auto bg = cube(0, CubeKind::Background, {{0, 0, 0}, {0, 1, 0}});
    EXPECT_EQ(patch_response(h, bg, BinWindow{0, 2}, 0), 2.0);
    EXPECT_EQ(patch_response(h, bg, BinWindow{0, 2}, 1), 8.0);
}

TEST(PatchResponse, Errors) {
    const auto h = cube(1, CubeKind::PatchPresent, {{0, 1}});
    const auto bg = cube(2, CubeKind::Background, {{0, 1}});
    EXPECT_EQ(kind_of([&] { patch_response(h, bg, BinWindow{0, 1}, 0); }), ErrorKind::Consistency);
    auto bg1 = cube(1, CubeKind::Background, {{0, 1, 2}});
    EXPECT_EQ(kind_of([&] { patch_response(h, bg1, BinWindow{0, 1}, 0); }), ErrorKind::Consistency);
    auto swapped = cube(1, CubeKind::PatchPresent, {{0, 1}});
    EXPECT_EQ(kind_of([&] { patch_response(h, swapped, BinWindow{0, 1}, 0); }), ErrorKind::Consistency);
    const auto bg2 = cube(1, CubeKind::Background, {{0, 1}});
    EXPECT_EQ(kind_of([&] { patch_response(h, bg2, BinWindow{0, 1}, 1); }), ErrorKind::Range);
    EXPECT_EQ(kind_of([&] { patch_response(h, bg2, BinWindow{1, 2}, 0); }), ErrorKind::Range);
    EXPECT_EQ(kind_of([&] { patch_response(h, bg2, BinWindow{1, 0}, 0); }), ErrorKind::Range);
}

TEST(PatchResponse, MatchesOracleAndIsMonotone) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::uint32_t> count(0, 50);
    std::uniform_int_distribution<std::size_t> bin(0, 31);
    for (int trial = 0; trial < 500; ++trial) {
        HistogramCube h(1, 32, 0, CubeKind::PatchPresent), bg(1, 32, 0, CubeKind::Background);
        for (auto& v : h.counts) v = count(rng);
        for (auto& v : bg.counts) v = count(rng);
        std::size_t lo = bin(rng), hi = bin(rng);
        if (lo > hi) std::swap(lo, hi);
        const std::vector<std::int64_t> hv(h.counts.begin(), h.counts.end()), bv(bg.counts.begin(), bg.counts.end());
        const double r = patch_response(h, bg, BinWindow{lo, hi}, 0);
        EXPECT_EQ(r, oracle::response(hv, bv, lo, hi));

        const std::size_t t = lo + (hi - lo) / 2;
        auto h2 = h;
        h2.at(0, t) += 7;
        EXPECT_GE(patch_response(h2, bg, BinWindow{lo, hi}, 0), r);
        auto bg2 = bg;
        bg2.at(0, t) += 7;
        EXPECT_LE(patch_response(h, bg2, BinWindow{lo, hi}, 0), r);
    }
}

TEST(PatchResponse, WorksOnExpectedCubes) {
    ExpectedCube h(1, 4, 0, CubeKind::PatchPresent), bg(1, 4, 0, CubeKind::Background);
    h.counts = {0.5, 2.25, 1.0, 0.0};
    bg.counts = {0.25, 0.5, 3.0, 0.0};
    EXPECT_DOUBLE_EQ(patch_response(h, bg, BinWindow{0, 3}, 0), 1.75);
}

TEST(AutoWindow, UniquePeak) {
    HistogramCube h(2, 128, 0, CubeKind::PatchPresent), bg(2, 128, 0, CubeKind::Background);
    h.at(0, 42) = 100;
    h.at(1, 42) = 50;
    h.at(1, 80) = 60;
    const std::vector<HistogramCube> hs{h}, bs{bg};
    EXPECT_EQ(auto_select_window(hs, bs, 3), (BinWindow{39, 45}));
}

TEST(AutoWindow, ClampsAtEdges) {
    HistogramCube h(1, 16, 0, CubeKind::PatchPresent), bg(1, 16, 0, CubeKind::Background);
    h.at(0, 0) = 9;
    EXPECT_EQ(auto_select_window(std::vector{h}, std::vector{bg}, 3), (BinWindow{0, 3}));
    h.at(0, 0) = 0;
    h.at(0, 15) = 9;
    EXPECT_EQ(auto_select_window(std::vector{h}, std::vector{bg}, 3), (BinWindow{12, 15}));
}

TEST(AutoWindow, TieGoesToSmallestBin) {
    HistogramCube h(1, 32, 0, CubeKind::PatchPresent), bg(1, 32, 0, CubeKind::Background);
    h.at(0, 10) = 5;
    h.at(0, 20) = 5;
    EXPECT_EQ(auto_select_window(std::vector{h}, std::vector{bg}, 0), (BinWindow{10, 10}));
}

TEST(AutoWindow, SumsClippedDifferencesOverScans) {
    // Scan 0 peaks at bin 5 but scan 1 contributes negative differences
    // there, which must be clipped rather than cancel.
    HistogramCube h0(1, 16, 0, CubeKind::PatchPresent), b0(1, 16, 0, CubeKind::Background);
    HistogramCube h1(1, 16, 1, CubeKind::PatchPresent), b1(1, 16, 1, CubeKind::Background);
    h0.at(0, 5) = 10;
    b1.at(0, 5) = 100;
    h1.at(0, 9) = 8;
    const std::vector<HistogramCube> hs{h0, h1}, bs{b0, b1};
    const auto d = clipped_difference_profile(hs, bs);
    EXPECT_EQ(d[5], 10.0);
    EXPECT_EQ(d[9], 8.0);
    EXPECT_EQ(auto_select_window(hs, bs, 1), (BinWindow{4, 6}));
}

TEST(AutoWindow, NoSignal) {
    HistogramCube h(1, 8, 0, CubeKind::PatchPresent), bg(1, 8, 0, CubeKind::Background);
    bg.at(0, 3) = 4;
    EXPECT_EQ(kind_of([&] { auto_select_window(std::vector{h}, std::vector{bg}, 3); }), ErrorKind::NoSignal);
    EXPECT_EQ(kind_of([&] { auto_select_window(std::vector<HistogramCube>{}, std::vector<HistogramCube>{}, 3); }),
              ErrorKind::Precondition);
}

TEST(PeakNormalize, Examples) {
    const auto n = peak_normalize({{0, 2.0}, {1, 4.0}, {2, 1.0}});
    EXPECT_EQ(n.at(0), 0.5);
    EXPECT_EQ(n.at(1), 1.0);
    EXPECT_EQ(n.at(2), 0.25);
    for (const auto& [k, v] : peak_normalize({{3, 7.5}, {9, 7.5}})) EXPECT_EQ(v, 1.0) << k;
}

TEST(PeakNormalize, Errors) {
    EXPECT_EQ(kind_of([] { peak_normalize({{0, 0.0}, {1, 0.0}}); }), ErrorKind::DegenerateMap);
    EXPECT_EQ(kind_of([] { peak_normalize({{0, 1.0}, {1, -0.5}}); }), ErrorKind::Precondition);
}

TEST(ValidateCube, ShapeAndOverflow) {
    SensorConfig s;
    s.pixel_count = 2;
    s.bin_count = 4;
    s.max_count = 10;
    HistogramCube ok(2, 4, 0, CubeKind::PatchPresent);
    EXPECT_NO_THROW(validate_cube(ok, s));
    HistogramCube wrong(3, 4, 0, CubeKind::PatchPresent);
    EXPECT_EQ(kind_of([&] { validate_cube(wrong, s); }), ErrorKind::Shape);
    ok.at(1, 2) = 11;
    EXPECT_EQ(kind_of([&] { validate_cube(ok, s); }), ErrorKind::CountOverflow);
}
