#include "diffcal/calibrate.hpp"

#include "diffcal/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace diffcal {

using nlohmann::json;

std::string_view to_string(WindowSource source) noexcept {
    switch (source) {
    case WindowSource::Explicit: return "explicit";
    case WindowSource::Manifest: return "manifest";
    case WindowSource::Auto: return "auto";
    }
    return "auto";
}

void CalibrationParams::validate() const {
    hough.validate();
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
        throw Error(ErrorKind::Config, "rel_threshold must lie in (0, 1)");
    }
    if (!(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0)) {
        throw Error(ErrorKind::Config, "min_valid_fraction must lie in [0, 1]");
    }
}

CalibrationResult calibrate(const Dataset& dataset, const CalibrationParams& params) {
    params.validate();
    const auto& m = dataset.manifest;
    params.hough.validate(m.frame.width, m.frame.height);
    const std::size_t K = m.grid.size();
    const std::size_t P = m.sensor.pixel_count;

    CalibrationResult result;
    result.warnings = dataset.warnings;

    result.detections.resize(K);
    parallel_for(K, params.threads, [&](std::size_t k) {
        result.detections[k] = detect_patch(dataset.load_frame(k), params.hough, k, m.frame);
    });
    result.invalid_detections = static_cast<std::size_t>(
        std::count_if(result.detections.begin(), result.detections.end(), [](const auto& d) { return !d.valid; }));
    const double valid_fraction = static_cast<double>(K - result.invalid_detections) / static_cast<double>(K);
    if (valid_fraction < params.min_valid_fraction) {
        std::ostringstream msg;
        msg << "detection: " << (K - result.invalid_detections) << " of " << K
            << " scan points have a valid patch detection, below the required fraction " << params.min_valid_fraction;
        throw Error(ErrorKind::InsufficientDetections, msg.str());
    }
    if (result.invalid_detections > 0) {
        result.warnings.push_back(std::to_string(result.invalid_detections) +
                                  " scan points without a valid detection are left out of the maps");
    }

    for (const auto* cubes : {&dataset.patch, &dataset.background}) {
        for (const auto& cube : *cubes) {
            result.saturated_bins += static_cast<std::size_t>(
                std::count(cube.counts.begin(), cube.counts.end(), m.sensor.max_count));
        }
    }
    if (result.saturated_bins > 0) {
        result.warnings.push_back(std::to_string(result.saturated_bins) + " histogram bins sit at max_count " +
                                  std::to_string(m.sensor.max_count) + "; responses there are clipped");
    }

    if (params.window) {
        result.window = *params.window;
        result.window_source = WindowSource::Explicit;
    } else if (m.window) {
        result.window = *m.window;
        result.window_source = WindowSource::Manifest;
    } else {
        result.window = auto_select_window(dataset.patch, dataset.background, params.half_width);
        result.window_source = WindowSource::Auto;
    }
    result.window.validate(m.sensor.bin_count);

    std::vector<std::vector<double>> responses(P, std::vector<double>(K, 0.0));
    parallel_for(K, params.threads, [&](std::size_t k) {
        for (std::size_t p = 0; p < P; ++p) {
            responses[p][k] = patch_response(dataset.patch[k], dataset.background[k], result.window, p);
        }
    });

    result.raw_maps.resize(P);
    result.maps.resize(P);
    result.masks.resize(P);
    result.peak_responses.resize(P);
    parallel_for(P, params.threads, [&](std::size_t p) {
        std::map<std::size_t, double> by_index;
        for (std::size_t k = 0; k < K; ++k) by_index.emplace(k, responses[p][k]);
        result.raw_maps[p] = assemble_map(by_index, result.detections, m.grid, p);
        result.peak_responses[p] = result.raw_maps[p].peak();
        try {
            result.maps[p] = normalize_map(result.raw_maps[p]);
            result.masks[p] = support_mask(result.maps[p], params.rel_threshold);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateMap) throw;
            throw Error(ErrorKind::DegenerateMap, "normalization of pixel " + std::to_string(p) +
                                                      " failed: no positive response inside window [" +
                                                      std::to_string(result.window.lo) + ", " +
                                                      std::to_string(result.window.hi) + "]");
        }
    });
    return result;
}

void write_calibration_outputs(const CalibrationResult& result, const Dataset& dataset, const CalibrationParams& params,
                               const fs::path& out_dir, Colormap cmap) {
    ensure_directory(out_dir);
    save_response_maps(result.maps, result.masks, result.detections, out_dir / "maps", params.rel_threshold);

    const fs::path overlay_dir = out_dir / "overlays";
    ensure_directory(overlay_dir);
    const RgbImage base = dataset.load_background_frame(0);
    for (const auto& map : result.maps) {
        write_png(render_overlay(map, base, cmap), overlay_dir / ("pixel_" + std::to_string(map.pixel) + ".png"));
    }
    write_png(render_composite(result.maps, base), overlay_dir / "composite.png");

    json peaks = json::array();
    for (double v : result.peak_responses) peaks.push_back(v);
    json summary = {{"window", {{"lo", result.window.lo}, {"hi", result.window.hi}}},
                    {"window_source", std::string(to_string(result.window_source))},
                    {"scan_points", result.detections.size()},
                    {"invalid_detections", result.invalid_detections},
                    {"peak_responses", peaks},
                    {"saturated_bins", result.saturated_bins},
                    {"rel_threshold", params.rel_threshold},
                    {"warnings", result.warnings}};
    write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");

    std::ostringstream txt;
    txt << "window = [" << result.window.lo << ", " << result.window.hi << "] (" << to_string(result.window_source)
        << ")\n";
    txt << "invalid_detections = " << result.invalid_detections << " of " << result.detections.size() << "\n";
    txt << "saturated_bins = " << result.saturated_bins << "\n";
    for (std::size_t p = 0; p < result.peak_responses.size(); ++p) {
        txt << "peak_response[" << p << "] = " << format_real(result.peak_responses[p]) << "\n";
    }
    for (const auto& w : result.warnings) txt << "warning: " << w << "\n";
    write_text_file(out_dir / "summary.txt", txt.str());
}

}  // namespace diffcal
