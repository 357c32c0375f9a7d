#pragma once

#include "diffcal/core.hpp"
#include "diffcal/histogram.hpp"
#include "diffcal/image.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace diffcal {

/// Truncated anisotropic Gaussian lobe of a pixel's spatial sensitivity.
struct GaussianComponent {
    Point2d center;
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    double rotation = 0.0;   // radians, counter-clockwise from +x
    double amplitude = 1.0;
    double truncation = 3.0; // Mahalanobis radius beyond which the lobe is 0

    double eval(Point2d u) const noexcept;
    void validate() const;
};

struct PixelKernel {
    std::vector<GaussianComponent> components;
};

/// Ground-truth sensitivity w_p(u) of every LiDAR pixel over the RGB frame.
struct KernelBank {
    RgbFrameSpec frame;
    std::vector<PixelKernel> kernels;

    std::size_t size() const noexcept { return kernels.size(); }
    void validate() const;
};

/// w_p(u). Throws Domain for u outside the frame.
double eval_kernel(const KernelBank& bank, std::size_t pixel, Point2d u);

/// One Gaussian per pixel on a lattice over the central 70% of the frame,
/// neighbors overlapping by roughly 15% of their 5%-level support area.
KernelBank default_kernel_bank(Layout layout, const RgbFrameSpec& frame);

struct PulseTap {
    int offset = 0;
    double weight = 0.0;
};

struct PatchSpec {
    double radius = 5.0;           // px
    std::size_t depth_bin = 40;
    double intensity = 4000.0;     // expected photons when the disk sees kernel weight 1
};

struct BackgroundSpec {
    std::size_t wall_bin = 72;
    double wall_intensity = 0.005; // photons per unit kernel mass
    double ambient_floor = 1e-4;   // photons per bin per unit kernel mass
};

struct FrameAppearance {
    double background_level = 0.08;
    double texture_amplitude = 0.02;
    double patch_level = 0.95;
};

struct SceneSpec {
    PatchSpec patch;
    BackgroundSpec background;
    std::vector<PulseTap> pulse{{-1, 0.25}, {0, 0.5}, {1, 0.25}};
    double scan_margin = 24.0;     // px between the outermost scan positions and the frame edge
    FrameAppearance appearance;

    void validate(const SensorConfig& sensor) const;
};

enum class NoiseKind { None, Poisson };

std::string_view to_string(NoiseKind kind) noexcept;
NoiseKind parse_noise_kind(std::string_view text);

struct SimConfig {
    SensorConfig sensor;
    GridSpec grid{40, 24};
    RgbFrameSpec frame;
    std::uint64_t seed = 1;
    std::size_t integration_step = 1;
    NoiseKind noise = NoiseKind::Poisson;
    unsigned threads = 0;

    void validate() const;
};

/// RGB position of the patch center at scan index k. The grid spans the
/// frame minus `margin` on every side.
Point2d scan_position(const GridSpec& grid, const RgbFrameSpec& frame, double margin, std::size_t k);

/// Discretized forward model. Kernel masses over the whole frame are
/// computed once at construction.
class ForwardModel {
public:
    ForwardModel(KernelBank bank, SceneSpec scene, SimConfig config);

    const KernelBank& bank() const noexcept { return bank_; }
    const SceneSpec& scene() const noexcept { return scene_; }
    const SimConfig& config() const noexcept { return config_; }

    Point2d patch_center(std::size_t k) const;

    /// Midpoint Riemann sum of w_p over the disk, clipped to the frame.
    double disk_mass(std::size_t pixel, Point2d center, double radius) const;
    double total_mass(std::size_t pixel) const { return total_mass_.at(pixel); }

    /// Mean kernel weight seen by the patch at scan k: disk mass divided by
    /// the full disk area.
    double patch_weight(std::size_t pixel, std::size_t k) const;

    /// Expected (pre-noise) counts, clamped to max_count.
    ExpectedCube render_transient(std::size_t k, bool with_patch) const;

private:
    KernelBank bank_;
    SceneSpec scene_;
    SimConfig config_;
    std::vector<double> total_mass_;
};

ExpectedCube render_transient(const KernelBank& bank, const SceneSpec& scene, std::size_t k, const SimConfig& cfg,
                              bool with_patch);

/// Rounds (None) or draws Poisson counts keyed by (seed, scan index, cube
/// kind, pixel, bin), then clamps to max_count.
HistogramCube apply_noise(const ExpectedCube& expected, std::uint64_t seed, NoiseKind kind, std::uint32_t max_count);

/// Textured dark scene plus an anti-aliased bright disk at the scan
/// position. The texture depends on the seed only, so consecutive frames
/// differ just around the two disk positions.
RgbImage render_frame(const SceneSpec& scene, std::size_t k, const SimConfig& cfg, bool with_patch = true);

/// Frame with the disk at an arbitrary center.
RgbImage render_frame_at(const SceneSpec& scene, Point2d center, const SimConfig& cfg, bool with_patch = true);

/// Per-pixel ground truth on the scan grid, indexed [pixel][scan index].
struct GroundTruth {
    std::vector<std::vector<double>> disk_weight;
    std::vector<std::vector<double>> point_weight;
};

GroundTruth ground_truth(const ForwardModel& model);

struct SimulationResult {
    std::filesystem::path manifest_path;
    std::size_t saturated_bins = 0;
};

/// Writes a complete dataset (manifest, frames, histograms for both scans,
/// ground truth) under out_dir.
SimulationResult simulate_scan(const KernelBank& bank, const SceneSpec& scene, const SimConfig& cfg,
                               const std::filesystem::path& out_dir);

}  // namespace diffcal
