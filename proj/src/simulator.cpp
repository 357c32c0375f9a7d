#include "diffcal/simulator.hpp"

#include "diffcal/error.hpp"
#include "diffcal/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace diffcal {

namespace {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// SplitMix64 stream; counter-keyed so every (seed, k, kind, p, t) gets its
/// own independent sequence.
class KeyedRng {
public:
    using result_type = std::uint64_t;
    explicit KeyedRng(std::uint64_t state) : state_(state) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

constexpr std::uint64_t texture_salt = 0x7465787475726521ull;

double unit_hash(std::uint64_t key) noexcept {
    return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
}

}  // namespace

double GaussianComponent::eval(Point2d u) const noexcept {
    const double dx = u.x - center.x;
    const double dy = u.y - center.y;
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    const double along = (c * dx + s * dy) / sigma_x;
    const double across = (-s * dx + c * dy) / sigma_y;
    const double d2 = along * along + across * across;
    if (d2 > truncation * truncation) return 0.0;
    return amplitude * std::exp(-0.5 * d2);
}

void GaussianComponent::validate() const {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw Error(ErrorKind::Config, "kernel sigmas must be positive");
    if (!(amplitude >= 0.0)) throw Error(ErrorKind::Config, "kernel amplitude must be nonnegative");
    if (!(truncation > 0.0)) throw Error(ErrorKind::Config, "kernel truncation must be positive");
}

void KernelBank::validate() const {
    frame.validate();
    if (kernels.empty()) throw Error(ErrorKind::Config, "kernel bank is empty");
    for (const auto& k : kernels) {
        for (const auto& c : k.components) c.validate();
    }
}

namespace {

bool inside_frame(const RgbFrameSpec& frame, Point2d u) {
    return u.x >= -0.5 && u.y >= -0.5 && u.x <= static_cast<double>(frame.width) - 0.5 &&
           u.y <= static_cast<double>(frame.height) - 0.5;
}

double eval_unchecked(const PixelKernel& kernel, Point2d u) {
    double sum = 0.0;
    for (const auto& c : kernel.components) sum += c.eval(u);
    return sum;
}

}  // namespace

double eval_kernel(const KernelBank& bank, std::size_t pixel, Point2d u) {
    if (pixel >= bank.size()) throw Error(ErrorKind::Range, "pixel " + std::to_string(pixel) + " not in kernel bank");
    if (!inside_frame(bank.frame, u)) {
        throw Error(ErrorKind::Domain, "coordinate (" + std::to_string(u.x) + ", " + std::to_string(u.y) +
                                           ") outside the RGB frame");
    }
    return eval_unchecked(bank.kernels[pixel], u);
}

KernelBank default_kernel_bank(Layout layout, const RgbFrameSpec& frame) {
    if (frame.width < 300 || frame.height < 200) {
        throw Error(ErrorKind::Config, "default kernel bank needs a frame of at least 300x200 px");
    }
    std::size_t cols = 3, rows = 3;
    switch (layout) {
    case Layout::Wide3x3: cols = rows = 3; break;
    case Layout::Grid4x4: cols = rows = 4; break;
    case Layout::Grid3x6: cols = 6; rows = 3; break;
    case Layout::Grid8x8: cols = rows = 8; break;
    }
    const std::size_t count = cols * rows;
    const double w = static_cast<double>(frame.width);
    const double h = static_cast<double>(frame.height);
    const double span_x = 0.70 * w;
    const double span_y = 0.70 * h;
    const double step_x = span_x / static_cast<double>(cols);
    const double step_y = span_y / static_cast<double>(rows);
    // 5%-level support radius is 2.45 sigma; a center spacing of 1.5 support
    // radii gives about 15% pairwise area overlap.
    const double sigma_per_step = 1.0 / (1.5 * std::sqrt(-2.0 * std::log(0.05)));

    KernelBank bank;
    bank.frame = frame;
    for (std::size_t p = 0; p < count; ++p) {
        const std::size_t r = p / cols;
        const std::size_t c = p % cols;
        const double pd = static_cast<double>(p);
        GaussianComponent g;
        g.center = {0.15 * w + step_x * (static_cast<double>(c) + 0.5),
                    0.15 * h + step_y * (static_cast<double>(r) + 0.5)};
        const double scale = 1.0 + 0.06 * std::cos(2.1 * pd);
        g.sigma_x = sigma_per_step * step_x * scale;
        g.sigma_y = sigma_per_step * step_y * scale * (1.0 + 0.08 * std::sin(1.7 * pd));
        g.rotation = 0.2 * std::sin(1.3 * pd + 0.4);
        g.amplitude = 0.7 + 0.4 * static_cast<double>((7 * p) % count) / static_cast<double>(count);
        g.truncation = 3.0;
        bank.kernels.push_back(PixelKernel{{g}});
    }
    return bank;
}

std::string_view to_string(NoiseKind kind) noexcept { return kind == NoiseKind::None ? "none" : "poisson"; }

NoiseKind parse_noise_kind(std::string_view text) {
    if (text == "none") return NoiseKind::None;
    if (text == "poisson") return NoiseKind::Poisson;
    throw Error(ErrorKind::Config, "unknown noise kind '" + std::string(text) + "'");
}

void SceneSpec::validate(const SensorConfig& sensor) const {
    if (!(patch.radius > 0.0)) throw Error(ErrorKind::Config, "patch radius must be positive");
    if (patch.depth_bin >= sensor.bin_count) throw Error(ErrorKind::Config, "depth_bin outside histogram");
    if (background.wall_bin >= sensor.bin_count) throw Error(ErrorKind::Config, "wall_bin outside histogram");
    if (!(patch.intensity >= 0.0) || !(background.wall_intensity >= 0.0) || !(background.ambient_floor >= 0.0)) {
        throw Error(ErrorKind::Config, "scene intensities must be nonnegative");
    }
    constexpr std::size_t default_half_width = 3;
    const auto gap = patch.depth_bin > background.wall_bin ? patch.depth_bin - background.wall_bin
                                                           : background.wall_bin - patch.depth_bin;
    if (gap <= default_half_width) {
        throw Error(ErrorKind::Config, "wall_bin must lie outside the default window around depth_bin");
    }
    if (pulse.empty()) throw Error(ErrorKind::Config, "pulse needs at least one tap");
    double total = 0.0;
    for (const auto& tap : pulse) {
        if (!(tap.weight >= 0.0)) throw Error(ErrorKind::Config, "pulse weights must be nonnegative");
        total += tap.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::Config, "pulse weights must sum to 1");
    if (!(scan_margin >= 0.0)) throw Error(ErrorKind::Config, "scan_margin must be nonnegative");
}

void SimConfig::validate() const {
    sensor.validate();
    grid.validate();
    frame.validate();
    if (integration_step < 1) throw Error(ErrorKind::Config, "integration_step must be >= 1 px");
}

Point2d scan_position(const GridSpec& grid, const RgbFrameSpec& frame, double margin, std::size_t k) {
    const GridCell cell = snake_index_to_cell(k, grid);
    const double w = static_cast<double>(frame.width) - 1.0;
    const double h = static_cast<double>(frame.height) - 1.0;
    const auto along = [margin](double extent, std::size_t n, std::size_t i) {
        if (n == 1) return 0.5 * extent;
        return margin + (extent - 2.0 * margin) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    return {along(w, grid.cols, cell.col), along(h, grid.rows, cell.row)};
}

ForwardModel::ForwardModel(KernelBank bank, SceneSpec scene, SimConfig config)
    : bank_(std::move(bank)), scene_(std::move(scene)), config_(std::move(config)) {
    config_.validate();
    bank_.validate();
    scene_.validate(config_.sensor);
    if (bank_.frame != config_.frame) throw Error(ErrorKind::Config, "kernel bank frame differs from sim frame");
    if (bank_.size() != config_.sensor.pixel_count) {
        throw Error(ErrorKind::Config, "kernel bank has " + std::to_string(bank_.size()) + " pixels, sensor has " +
                                           std::to_string(config_.sensor.pixel_count));
    }
    const auto step = config_.integration_step;
    const double offset = 0.5 * static_cast<double>(step - 1);
    const double area = static_cast<double>(step * step);
    total_mass_.assign(bank_.size(), 0.0);
    for (std::size_t p = 0; p < bank_.size(); ++p) {
        double mass = 0.0;
        for (std::size_t y = 0; y < config_.frame.height; y += step) {
            for (std::size_t x = 0; x < config_.frame.width; x += step) {
                mass += eval_unchecked(bank_.kernels[p], {static_cast<double>(x) + offset, static_cast<double>(y) + offset});
            }
        }
        total_mass_[p] = mass * area;
    }
}

Point2d ForwardModel::patch_center(std::size_t k) const {
    return scan_position(config_.grid, config_.frame, scene_.scan_margin, k);
}

double ForwardModel::disk_mass(std::size_t pixel, Point2d center, double radius) const {
    const auto step = config_.integration_step;
    const double offset = 0.5 * static_cast<double>(step - 1);
    const double s = static_cast<double>(step);
    // Lattice samples sit at i*step + offset; visit only those in the disk's box.
    const auto first = [&](double lo) {
        const double i = std::ceil((lo - offset) / s);
        return static_cast<std::ptrdiff_t>(std::max(0.0, i));
    };
    const auto last = [&](double hi, std::size_t extent) {
        const double i = std::floor((hi - offset) / s);
        const auto max_i = static_cast<std::ptrdiff_t>((extent - 1) / step);
        return std::min(static_cast<std::ptrdiff_t>(i), max_i);
    };
    const std::ptrdiff_t ix0 = first(center.x - radius);
    const std::ptrdiff_t ix1 = last(center.x + radius, config_.frame.width);
    const std::ptrdiff_t iy0 = first(center.y - radius);
    const std::ptrdiff_t iy1 = last(center.y + radius, config_.frame.height);
    const double r2 = radius * radius;
    double mass = 0.0;
    for (std::ptrdiff_t iy = iy0; iy <= iy1; ++iy) {
        const double uy = static_cast<double>(iy) * s + offset;
        for (std::ptrdiff_t ix = ix0; ix <= ix1; ++ix) {
            const double ux = static_cast<double>(ix) * s + offset;
            const double dx = ux - center.x;
            const double dy = uy - center.y;
            if (dx * dx + dy * dy > r2) continue;
            mass += eval_unchecked(bank_.kernels.at(pixel), {ux, uy});
        }
    }
    return mass * s * s;
}

double ForwardModel::patch_weight(std::size_t pixel, std::size_t k) const {
    const double r = scene_.patch.radius;
    return disk_mass(pixel, patch_center(k), r) / (std::numbers::pi * r * r);
}

ExpectedCube ForwardModel::render_transient(std::size_t k, bool with_patch) const {
    const auto& sensor = config_.sensor;
    if (k >= config_.grid.size()) throw Error(ErrorKind::Range, "scan index " + std::to_string(k) + " outside grid");
    ExpectedCube cube(sensor.pixel_count, sensor.bin_count, k,
                      with_patch ? CubeKind::PatchPresent : CubeKind::Background);
    const auto spread = [&](std::span<double> hist, std::size_t bin, double amount) {
        for (const auto& tap : scene_.pulse) {
            const auto t = static_cast<std::ptrdiff_t>(bin) + tap.offset;
            if (t < 0 || t >= static_cast<std::ptrdiff_t>(hist.size())) continue;
            hist[static_cast<std::size_t>(t)] += amount * tap.weight;
        }
    };
    const double r = scene_.patch.radius;
    const Point2d center = patch_center(k);
    for (std::size_t p = 0; p < sensor.pixel_count; ++p) {
        auto hist = cube.pixel(p);
        const double total = total_mass_[p];
        double wall_mass = total;
        if (with_patch) {
            const double disk = disk_mass(p, center, r);
            wall_mass = std::max(0.0, total - disk);
            spread(hist, scene_.patch.depth_bin, scene_.patch.intensity * disk / (std::numbers::pi * r * r));
        }
        spread(hist, scene_.background.wall_bin, scene_.background.wall_intensity * wall_mass);
        const double ambient = scene_.background.ambient_floor * total;
        for (auto& v : hist) v = std::min(v + ambient, static_cast<double>(sensor.max_count));
    }
    return cube;
}

ExpectedCube render_transient(const KernelBank& bank, const SceneSpec& scene, std::size_t k, const SimConfig& cfg,
                              bool with_patch) {
    return ForwardModel(bank, scene, cfg).render_transient(k, with_patch);
}

HistogramCube apply_noise(const ExpectedCube& expected, std::uint64_t seed, NoiseKind kind, std::uint32_t max_count) {
    HistogramCube out(expected.pixel_count, expected.bin_count, expected.scan_index, expected.kind);
    const std::uint64_t scan_key = mix64(mix64(mix64(seed) ^ expected.scan_index) ^
                                         (expected.kind == CubeKind::PatchPresent ? 0x5041ull : 0x4247ull));
    for (std::size_t p = 0; p < expected.pixel_count; ++p) {
        for (std::size_t t = 0; t < expected.bin_count; ++t) {
            const double lambda = expected.at(p, t);
            if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
                throw Error(ErrorKind::Invariant, "expected count at scan " + std::to_string(expected.scan_index) +
                                                      " pixel " + std::to_string(p) + " bin " + std::to_string(t) +
                                                      " is negative or not finite");
            }
            double value = 0.0;
            if (kind == NoiseKind::None) {
                value = std::round(lambda);
            } else if (lambda > 0.0) {
                KeyedRng rng(mix64(mix64(scan_key ^ p) ^ t));
                std::poisson_distribution<long long> draw(lambda);
                value = static_cast<double>(draw(rng));
            }
            out.at(p, t) = static_cast<std::uint32_t>(std::min(value, static_cast<double>(max_count)));
        }
    }
    return out;
}

namespace {

std::vector<double> texture_levels(const SceneSpec& scene, const SimConfig& cfg) {
    const auto n = cfg.frame.width * cfg.frame.height;
    const auto& look = scene.appearance;
    const std::uint64_t texture_key = mix64(cfg.seed ^ texture_salt);
    std::vector<double> level(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = 2.0 * unit_hash(texture_key ^ static_cast<std::uint64_t>(i)) - 1.0;
        level[i] = look.background_level + look.texture_amplitude * u;
    }
    return level;
}

// 4x4 supersampled coverage of the disk blended toward the patch level.
void draw_disk(std::vector<double>& level, const SceneSpec& scene, Point2d center, const RgbFrameSpec& frame) {
    constexpr int sub = 4;
    const auto w = frame.width;
    const auto h = frame.height;
    const double r = scene.patch.radius;
    const auto x0 = static_cast<std::ptrdiff_t>(std::floor(center.x - r - 1.0));
    const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(center.x + r + 1.0));
    const auto y0 = static_cast<std::ptrdiff_t>(std::floor(center.y - r - 1.0));
    const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(center.y + r + 1.0));
    for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, y0); y <= std::min<std::ptrdiff_t>(h - 1, y1); ++y) {
        for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(0, x0); x <= std::min<std::ptrdiff_t>(w - 1, x1); ++x) {
            int hits = 0;
            for (int sy = 0; sy < sub; ++sy) {
                for (int sx = 0; sx < sub; ++sx) {
                    const double ux = static_cast<double>(x) - 0.5 + (sx + 0.5) / sub - center.x;
                    const double uy = static_cast<double>(y) - 0.5 + (sy + 0.5) / sub - center.y;
                    if (ux * ux + uy * uy <= r * r) ++hits;
                }
            }
            if (hits == 0) continue;
            const double cover = static_cast<double>(hits) / (sub * sub);
            auto& v = level[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
            v += cover * (scene.appearance.patch_level - v);
        }
    }
}

RgbImage to_rgb(const std::vector<double>& level, const RgbFrameSpec& frame) {
    RgbImage img(frame.width, frame.height);
    for (std::size_t i = 0; i < level.size(); ++i) {
        const auto byte = static_cast<std::uint8_t>(std::lround(std::clamp(level[i], 0.0, 1.0) * 255.0));
        img.data[3 * i] = byte;
        img.data[3 * i + 1] = byte;
        img.data[3 * i + 2] = byte;
    }
    return img;
}

}  // namespace

RgbImage render_frame_at(const SceneSpec& scene, Point2d center, const SimConfig& cfg, bool with_patch) {
    auto level = texture_levels(scene, cfg);
    if (with_patch) draw_disk(level, scene, center, cfg.frame);
    return to_rgb(level, cfg.frame);
}

RgbImage render_frame(const SceneSpec& scene, std::size_t k, const SimConfig& cfg, bool with_patch) {
    return render_frame_at(scene, scan_position(cfg.grid, cfg.frame, scene.scan_margin, k), cfg, with_patch);
}

GroundTruth ground_truth(const ForwardModel& model) {
    const auto P = model.config().sensor.pixel_count;
    const auto K = model.config().grid.size();
    GroundTruth truth;
    truth.disk_weight.assign(P, std::vector<double>(K, 0.0));
    truth.point_weight.assign(P, std::vector<double>(K, 0.0));
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t k = 0; k < K; ++k) {
            truth.disk_weight[p][k] = model.patch_weight(p, k);
            truth.point_weight[p][k] = eval_kernel(model.bank(), p, model.patch_center(k));
        }
    }
    return truth;
}

namespace {

std::vector<double> to_grid_layout(const std::vector<double>& by_index, const GridSpec& grid) {
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const GridCell c = snake_index_to_cell(k, grid);
        out[c.row * grid.cols + c.col] = by_index[k];
    }
    return out;
}

}  // namespace

SimulationResult simulate_scan(const KernelBank& bank, const SceneSpec& scene, const SimConfig& cfg,
                               const fs::path& out_dir) {
    const ForwardModel model(bank, scene, cfg);
    const auto K = cfg.grid.size();

    DatasetManifest manifest;
    manifest.sensor = cfg.sensor;
    manifest.grid = cfg.grid;
    manifest.frame = cfg.frame;
    manifest.scans = standard_scan_entries(K, false);
    manifest.background = standard_scan_entries(K, true);
    manifest.provenance = "synthetic scan; seed " + std::to_string(cfg.seed) + ", noise " +
                          std::string(to_string(cfg.noise));
    manifest.ground_truth = fs::path("truth");

    for (const char* sub : {"frames", "hist", "bg_frames", "bg_hist", "truth"}) ensure_directory(out_dir / sub);

    // Without the patch every frame is the bare texture: encode it once.
    const auto texture = texture_levels(scene, cfg);
    const fs::path blank = out_dir / manifest.background[0].frame;
    write_png(to_rgb(texture, cfg.frame), blank);

    std::vector<std::size_t> saturated(K, 0);
    parallel_for(K, cfg.threads, [&](std::size_t k) {
        for (const bool with_patch : {true, false}) {
            const auto expected = model.render_transient(k, with_patch);
            const auto counts = apply_noise(expected, cfg.seed, cfg.noise, cfg.sensor.max_count);
            saturated[k] += static_cast<std::size_t>(
                std::count(counts.counts.begin(), counts.counts.end(), cfg.sensor.max_count));
            const auto& entry = with_patch ? manifest.scans[k] : manifest.background[k];
            write_histogram_csv(counts, out_dir / entry.hist);
        }
        auto level = texture;
        draw_disk(level, scene, model.patch_center(k), cfg.frame);
        write_png(to_rgb(level, cfg.frame), out_dir / manifest.scans[k].frame);
        if (k > 0) {
            fs::copy_file(blank, out_dir / manifest.background[k].frame, fs::copy_options::overwrite_existing);
        }
    });

    const auto truth = ground_truth(model);
    std::vector<std::vector<double>> disk, point;
    for (std::size_t p = 0; p < truth.disk_weight.size(); ++p) {
        disk.push_back(to_grid_layout(truth.disk_weight[p], cfg.grid));
        point.push_back(to_grid_layout(truth.point_weight[p], cfg.grid));
    }
    write_ground_truth_grids(out_dir / "truth", cfg.grid, disk, point);

    const auto manifest_path = out_dir / "manifest.json";
    write_manifest(manifest, manifest_path);

    SimulationResult result;
    result.manifest_path = manifest_path;
    for (auto s : saturated) result.saturated_bins += s;
    return result;
}

}  // namespace diffcal
