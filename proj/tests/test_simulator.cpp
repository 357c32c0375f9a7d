#include "diffcal/io.hpp"
#include "diffcal/simulator.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace diffcal;
using testutil::kind_of;

namespace {

SimConfig small_config() {
    SimConfig cfg;
    cfg.grid = GridSpec{4, 3};
    cfg.threads = 1;
    return cfg;
}

}  // namespace

TEST(Kernel, GaussianMatchesCovarianceForm) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        GaussianComponent g;
        g.center = {100 + 20 * u(rng), 80 + 20 * u(rng)};
        g.sigma_x = 8 + 5 * u(rng);
        g.sigma_y = 8 + 5 * u(rng);
        g.rotation = 3 * u(rng);
        g.amplitude = 1.5 + u(rng);
        const double x = g.center.x + 25 * u(rng), y = g.center.y + 25 * u(rng);
        EXPECT_NEAR(g.eval({x, y}),
                    oracle::gaussian(x, y, g.center.x, g.center.y, g.sigma_x, g.sigma_y, g.rotation, g.amplitude,
                                     g.truncation),
                    1e-12);
    }
}

TEST(Kernel, DomainAndRange) {
    const auto bank = default_kernel_bank(Layout::Wide3x3, RgbFrameSpec{});
    EXPECT_NO_THROW(eval_kernel(bank, 0, {-0.5, -0.5}));
    EXPECT_NO_THROW(eval_kernel(bank, 0, {847.5, 479.5}));
    EXPECT_EQ(kind_of([&] { eval_kernel(bank, 0, {-0.6, 10}); }), ErrorKind::Domain);
    EXPECT_EQ(kind_of([&] { eval_kernel(bank, 0, {10, 480}); }), ErrorKind::Domain);
    EXPECT_EQ(kind_of([&] { eval_kernel(bank, 9, {10, 10}); }), ErrorKind::Range);
}

TEST(Kernel, DefaultBankLayouts) {
    for (Layout l : {Layout::Wide3x3, Layout::Grid4x4, Layout::Grid3x6, Layout::Grid8x8}) {
        EXPECT_EQ(default_kernel_bank(l, RgbFrameSpec{}).size(), layout_pixel_count(l));
    }
    EXPECT_EQ(kind_of([] { default_kernel_bank(Layout::Wide3x3, RgbFrameSpec{200, 100}); }), ErrorKind::Config);
}

TEST(Kernel, NeighborsOverlapModestly) {
    const RgbFrameSpec frame;
    const auto bank = default_kernel_bank(Layout::Wide3x3, frame);
    // 5%-level supports of horizontally adjacent pixels 3 and 4.
    const auto support = [&](std::size_t p, double x, double y) {
        const auto& g = bank.kernels[p].components.front();
        return eval_kernel(bank, p, {x, y}) >= 0.05 * g.amplitude;
    };
    std::size_t inter = 0, area3 = 0;
    for (std::size_t y = 0; y < frame.height; y += 2) {
        for (std::size_t x = 0; x < frame.width; x += 2) {
            const bool a = support(3, x, y), b = support(4, x, y);
            area3 += a;
            inter += a && b;
        }
    }
    const double frac = static_cast<double>(inter) / static_cast<double>(area3);
    EXPECT_GT(frac, 0.05);
    EXPECT_LT(frac, 0.30);
}

TEST(Forward, DiskMassMatchesBruteForce) {
    const auto cfg = small_config();
    const auto bank = default_kernel_bank(Layout::Wide3x3, cfg.frame);
    const ForwardModel model(bank, SceneSpec{}, cfg);
    for (const Point2d c : {Point2d{300.3, 200.7}, Point2d{2.0, 3.0}, Point2d{846.0, 240.2}}) {
        for (std::size_t p : {0u, 4u, 8u}) {
            double brute = 0.0;
            for (std::size_t y = 0; y < cfg.frame.height; ++y) {
                for (std::size_t x = 0; x < cfg.frame.width; ++x) {
                    const double dx = x - c.x, dy = y - c.y;
                    if (dx * dx + dy * dy <= 25.0) brute += eval_kernel(bank, p, {double(x), double(y)});
                }
            }
            EXPECT_NEAR(model.disk_mass(p, c, 5.0), brute, 1e-12 * std::max(1.0, brute));
        }
    }
}

TEST(Forward, TransientStructure) {
    auto cfg = small_config();
    SceneSpec scene;
    const auto bank = default_kernel_bank(Layout::Wide3x3, cfg.frame);
    const ForwardModel model(bank, scene, cfg);
    const std::size_t k = 5;
    const auto h = model.render_transient(k, true);
    const auto bg = model.render_transient(k, false);
    EXPECT_EQ(h.kind, CubeKind::PatchPresent);
    EXPECT_EQ(bg.kind, CubeKind::Background);
    const double r = scene.patch.radius;
    for (std::size_t p = 0; p < 9; ++p) {
        const double total = model.total_mass(p);
        const double disk = model.disk_mass(p, model.patch_center(k), r);
        const double amb = scene.background.ambient_floor * total;
        const double patch = scene.patch.intensity * disk / (std::numbers::pi * r * r);
        EXPECT_NEAR(h.at(p, 40), amb + 0.5 * patch, 1e-9);
        EXPECT_NEAR(h.at(p, 39), amb + 0.25 * patch, 1e-9);
        EXPECT_NEAR(h.at(p, 72), amb + 0.5 * scene.background.wall_intensity * (total - disk), 1e-9);
        EXPECT_NEAR(bg.at(p, 40), amb, 1e-12);
        EXPECT_NEAR(bg.at(p, 72), amb + 0.5 * scene.background.wall_intensity * total, 1e-9);
        EXPECT_NEAR(h.at(p, 10), amb, 1e-12);
        EXPECT_NEAR(model.patch_weight(p, k), disk / (std::numbers::pi * r * r), 1e-15);
    }
}

TEST(Forward, ClampsAtMaxCount) {
    auto cfg = small_config();
    cfg.sensor.max_count = 100;
    SceneSpec scene;
    scene.patch.intensity = 1e7;
    const auto bank = default_kernel_bank(Layout::Wide3x3, cfg.frame);
    const ForwardModel model(bank, scene, cfg);
    for (std::size_t k = 0; k < cfg.grid.size(); ++k) {
        for (double v : model.render_transient(k, true).counts) EXPECT_LE(v, 100.0);
    }
}

TEST(Noise, NoneRounds) {
    ExpectedCube e(1, 4, 0, CubeKind::PatchPresent);
    e.counts = {0.4, 0.5, 2.6, 1e6};
    const auto c = apply_noise(e, 1, NoiseKind::None, 1000);
    EXPECT_EQ(c.counts, (std::vector<std::uint32_t>{0, 1, 3, 1000}));
}

TEST(Noise, PoissonMoments) {
    ExpectedCube e(4, 1000, 3, CubeKind::Background);
    for (auto& v : e.counts) v = 25.0;
    const auto c = apply_noise(e, 42, NoiseKind::Poisson, 65535);
    double sum = 0, sq = 0;
    for (auto v : c.counts) {
        sum += v;
        sq += double(v) * v;
    }
    const double n = static_cast<double>(c.counts.size());
    const double mean = sum / n, var = sq / n - mean * mean;
    EXPECT_NEAR(mean, 25.0, 0.5);
    EXPECT_NEAR(var, 25.0, 2.5);
}

TEST(Noise, KeyedAndDeterministic) {
    ExpectedCube e(2, 16, 7, CubeKind::PatchPresent);
    for (auto& v : e.counts) v = 10.0;
    EXPECT_EQ(apply_noise(e, 5, NoiseKind::Poisson, 65535), apply_noise(e, 5, NoiseKind::Poisson, 65535));
    EXPECT_NE(apply_noise(e, 5, NoiseKind::Poisson, 65535).counts, apply_noise(e, 6, NoiseKind::Poisson, 65535).counts);
    auto bg = e;
    bg.kind = CubeKind::Background;
    EXPECT_NE(apply_noise(e, 5, NoiseKind::Poisson, 65535).counts, apply_noise(bg, 5, NoiseKind::Poisson, 65535).counts);
    ExpectedCube zero(1, 8, 0, CubeKind::PatchPresent);
    for (auto v : apply_noise(zero, 5, NoiseKind::Poisson, 65535).counts) EXPECT_EQ(v, 0u);
    zero.counts[3] = -1.0;
    EXPECT_EQ(kind_of([&] { apply_noise(zero, 5, NoiseKind::Poisson, 65535); }), ErrorKind::Invariant);
}

TEST(Frames, TextureFixedPatchMoves) {
    const auto cfg = small_config();
    const SceneSpec scene;
    const auto a = render_frame(scene, 0, cfg);
    const auto b = render_frame(scene, 1, cfg);
    const auto blank = render_frame(scene, 0, cfg, false);
    const auto pa = scan_position(cfg.grid, cfg.frame, scene.scan_margin, 0);
    EXPECT_GT(a.get(static_cast<std::size_t>(pa.x), static_cast<std::size_t>(pa.y))[0], 200);
    EXPECT_LT(blank.get(static_cast<std::size_t>(pa.x), static_cast<std::size_t>(pa.y))[0], 60);
    EXPECT_EQ(a.get(400, 400), b.get(400, 400));
    EXPECT_EQ(a.get(400, 400), blank.get(400, 400));
}

TEST(Frames, ScanPositionsSpanMargins) {
    const GridSpec g{5, 4};
    const RgbFrameSpec f;
    const auto first = scan_position(g, f, 24.0, 0);
    const auto last = scan_position(g, f, 24.0, g.size() - 1);
    EXPECT_DOUBLE_EQ(first.x, 24.0);
    EXPECT_DOUBLE_EQ(first.y, 24.0);
    // Row 3 is odd, so the snake ends at column 0.
    EXPECT_DOUBLE_EQ(last.x, 24.0);
    EXPECT_DOUBLE_EQ(last.y, 479.0 - 24.0);
    EXPECT_DOUBLE_EQ(scan_position(g, f, 24.0, 4).x, 847.0 - 24.0);
}

TEST(Simulate, WritesLoadableDataset) {
    testutil::TempDir dir("sim");
    const auto cfg = small_config();
    const auto bank = default_kernel_bank(cfg.sensor.layout, cfg.frame);
    const auto res = simulate_scan(bank, SceneSpec{}, cfg, dir.path());
    EXPECT_EQ(res.saturated_bins, 0u);
    const auto ds = load_dataset(dir.path());
    EXPECT_TRUE(ds.warnings.empty());
    EXPECT_EQ(ds.patch.size(), 12u);
    EXPECT_EQ(ds.background.size(), 12u);
    EXPECT_TRUE(ds.manifest.ground_truth.has_value());
    const auto disk = read_ground_truth_disk(dir.path() / "truth", cfg.grid, 4);
    EXPECT_EQ(disk.size(), 12u);
}

TEST(Simulate, ThreadCountDoesNotChangeBytes) {
    testutil::TempDir a("sim_a"), b("sim_b");
    auto cfg = small_config();
    const auto bank = default_kernel_bank(cfg.sensor.layout, cfg.frame);
    cfg.threads = 1;
    simulate_scan(bank, SceneSpec{}, cfg, a.path());
    cfg.threads = 4;
    simulate_scan(bank, SceneSpec{}, cfg, b.path());
    std::string diff;
    EXPECT_TRUE(testutil::same_tree(a.path(), b.path(), &diff)) << diff;
}
