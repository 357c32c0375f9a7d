#pragma once

#include "diffcal/core.hpp"
#include "diffcal/histogram.hpp"
#include "diffcal/image.hpp"
#include "diffcal/patch_detect.hpp"
#include "diffcal/response_map.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace diffcal {

namespace fs = std::filesystem;

inline constexpr int manifest_format_version = 1;
inline constexpr int maps_format_version = 1;

/// One scan point's file pair, paths relative to the dataset root.
struct ScanEntry {
    std::size_t index = 0;
    fs::path frame;
    fs::path hist;
    friend bool operator==(const ScanEntry&, const ScanEntry&) = default;
};

struct DatasetManifest {
    int format_version = manifest_format_version;
    SensorConfig sensor;
    GridSpec grid;
    RgbFrameSpec frame;
    std::optional<BinWindow> window;
    std::vector<ScanEntry> scans;
    std::vector<ScanEntry> background;
    std::string provenance;
    std::optional<fs::path> ground_truth;  // directory, simulator datasets only

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Standard layout: frames/, hist/, bg_frames/, bg_hist/ with six-digit
/// zero-padded scan indices.
std::vector<ScanEntry> standard_scan_entries(std::size_t count, bool background);

DatasetManifest read_manifest(const fs::path& path);
void write_manifest(const DatasetManifest& manifest, const fs::path& path);

/// Validated in-memory dataset. Cubes are indexed by scan index; frames are
/// checked for existence and size at load time and decoded on demand.
struct Dataset {
    fs::path root;
    DatasetManifest manifest;
    std::vector<HistogramCube> patch;
    std::vector<HistogramCube> background;
    std::vector<std::string> warnings;

    RgbImage load_frame(std::size_t k) const;
    RgbImage load_background_frame(std::size_t k) const;
};

/// Accepts the manifest file or the dataset directory containing
/// manifest.json.
Dataset load_dataset(const fs::path& manifest_or_dir, unsigned threads = 0);

/// P rows of T comma-separated integers.
HistogramCube read_histogram_csv(const fs::path& path, const SensorConfig& sensor, std::size_t scan_index,
                                 CubeKind kind);
void write_histogram_csv(const HistogramCube& cube, const fs::path& path);

RgbImage read_png(const fs::path& path);
void write_png(const RgbImage& image, const fs::path& path);
/// (width, height) from the PNG header without decoding pixels.
std::pair<std::size_t, std::size_t> png_dimensions(const fs::path& path);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_real(double value);
double parse_real(std::string_view text, const std::string& context);

void write_grid_csv(const fs::path& path, const GridSpec& grid, std::span<const double> values);
std::vector<double> read_grid_csv(const fs::path& path, const GridSpec& grid);
void write_mask_csv(const fs::path& path, const GridSpec& grid, const std::vector<bool>& mask);
std::vector<bool> read_mask_csv(const fs::path& path, const GridSpec& grid);

void write_detections_csv(const fs::path& path, std::span<const PatchDetection> detections);
std::vector<PatchDetection> read_detections_csv(const fs::path& path);

/// Calibration output as stored on disk.
struct MapSet {
    std::vector<ResponseMap> maps;
    std::vector<SupportMask> masks;
    std::vector<PatchDetection> detections;
    double rel_threshold = default_rel_threshold;
};

/// Writes maps.json, pixel_<p>_values.csv, pixel_<p>_valid.csv,
/// pixel_<p>_support.csv and detections.csv.
void save_response_maps(std::span<const ResponseMap> maps, std::span<const SupportMask> masks,
                        std::span<const PatchDetection> detections, const fs::path& out_dir,
                        double rel_threshold = default_rel_threshold);
MapSet load_response_maps(const fs::path& dir);

void write_report_text(const ConsistencyReport& report, const fs::path& path);
void write_report_csv(const ConsistencyReport& report, const fs::path& path);

/// Ground-truth samples on the scan grid: truth/pixel_<p>_disk.csv and
/// truth/pixel_<p>_point.csv.
void write_ground_truth_grids(const fs::path& dir, const GridSpec& grid,
                              const std::vector<std::vector<double>>& disk_weight,
                              const std::vector<std::vector<double>>& point_weight);
/// Disk-convolved samples for one pixel, laid out on the grid (row-major).
std::vector<double> read_ground_truth_disk(const fs::path& dir, const GridSpec& grid, std::size_t pixel);

void ensure_directory(const fs::path& dir);
void write_text_file(const fs::path& path, const std::string& content);

// Overlay rendering.

enum class Colormap { Viridis, Hot, Gray };

std::string_view to_string(Colormap cmap) noexcept;
Colormap parse_colormap(std::string_view text);
Rgb8 colormap_lookup(Colormap cmap, double value);

/// Splats every valid cell as a disk at its anchor, colored by value with
/// opacity equal to value; where splats overlap the larger value wins.
/// splat_radius <= 0 picks half the mean spacing of adjacent anchors.
RgbImage render_overlay(const ResponseMap& map, const RgbImage& base, Colormap cmap, double splat_radius = 0.0);

/// All pixels in one image, each pixel in its own hue.
RgbImage render_composite(std::span<const ResponseMap> maps, const RgbImage& base, double splat_radius = 0.0);

}  // namespace diffcal
