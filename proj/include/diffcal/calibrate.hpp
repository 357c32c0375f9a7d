#pragma once

#include "diffcal/histogram.hpp"
#include "diffcal/io.hpp"
#include "diffcal/patch_detect.hpp"
#include "diffcal/response_map.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace diffcal {

enum class WindowSource { Explicit, Manifest, Auto };

std::string_view to_string(WindowSource source) noexcept;

struct CalibrationParams {
    HoughParams hough;
    /// Explicit window; wins over the manifest window and auto selection.
    std::optional<BinWindow> window;
    std::size_t half_width = 3;
    double rel_threshold = default_rel_threshold;
    /// Calibration fails when fewer scan points than this carry a valid
    /// detection.
    double min_valid_fraction = 0.9;
    unsigned threads = 0;

    void validate() const;
};

struct CalibrationResult {
    std::vector<PatchDetection> detections;  // indexed by scan index
    BinWindow window;
    WindowSource window_source = WindowSource::Auto;
    std::vector<ResponseMap> raw_maps;
    std::vector<ResponseMap> maps;           // peak-normalized
    std::vector<SupportMask> masks;
    std::vector<double> peak_responses;
    std::size_t invalid_detections = 0;
    std::size_t saturated_bins = 0;          // bins at max_count, both scans
    std::vector<std::string> warnings;
};

/// Detection, window selection, responses, assembly, normalization and
/// support masks for every pixel.
CalibrationResult calibrate(const Dataset& dataset, const CalibrationParams& params);

/// Maps, per-pixel overlays plus a composite, summary.json and summary.txt.
/// Overlays are drawn over background frame 0.
void write_calibration_outputs(const CalibrationResult& result, const Dataset& dataset, const CalibrationParams& params,
                               const fs::path& out_dir, Colormap cmap = Colormap::Viridis);

}  // namespace diffcal
