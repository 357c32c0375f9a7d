#include "diffcal/histogram.hpp"

#include <cmath>

namespace diffcal {

std::string_view to_string(CubeKind kind) noexcept {
    return kind == CubeKind::PatchPresent ? "patch_present" : "background";
}

void BinWindow::validate(std::size_t bin_count) const {
    if (lo > hi || hi >= bin_count) {
        throw Error(ErrorKind::Range, "bin window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                          "] invalid for " + std::to_string(bin_count) + " bins");
    }
}

void validate_cube(const HistogramCube& cube, const SensorConfig& sensor) {
    if (cube.pixel_count != sensor.pixel_count || cube.bin_count != sensor.bin_count ||
        cube.counts.size() != sensor.pixel_count * sensor.bin_count) {
        throw Error(ErrorKind::Shape, "cube for scan index " + std::to_string(cube.scan_index) + " is " +
                                          std::to_string(cube.pixel_count) + "x" + std::to_string(cube.bin_count) +
                                          ", expected " + std::to_string(sensor.pixel_count) + "x" +
                                          std::to_string(sensor.bin_count));
    }
    for (std::size_t i = 0; i < cube.counts.size(); ++i) {
        if (cube.counts[i] > sensor.max_count) {
            throw Error(ErrorKind::CountOverflow, "scan index " + std::to_string(cube.scan_index) + " pixel " +
                                                      std::to_string(i / cube.bin_count) + " bin " +
                                                      std::to_string(i % cube.bin_count) + " exceeds max_count");
        }
    }
}

std::vector<double> clipped_difference_profile(std::span<const HistogramCube> patch,
                                               std::span<const HistogramCube> background) {
    if (patch.empty()) throw Error(ErrorKind::Precondition, "auto window selection needs at least one scan point");
    if (patch.size() != background.size()) {
        throw Error(ErrorKind::Consistency, "patch and background scans differ in length");
    }
    const std::size_t bins = patch.front().bin_count;
    std::vector<double> profile(bins, 0.0);
    for (std::size_t i = 0; i < patch.size(); ++i) {
        const auto& h = patch[i];
        const auto& bg = background[i];
        if (h.scan_index != bg.scan_index || h.bin_count != bins || bg.bin_count != bins ||
            h.pixel_count != bg.pixel_count) {
            throw Error(ErrorKind::Consistency, "cube pair " + std::to_string(i) + " mismatched");
        }
        for (std::size_t p = 0; p < h.pixel_count; ++p) {
            for (std::size_t t = 0; t < bins; ++t) {
                const double diff = static_cast<double>(h.at(p, t)) - static_cast<double>(bg.at(p, t));
                if (diff > 0.0) profile[t] += diff;
            }
        }
    }
    return profile;
}

BinWindow auto_select_window(std::span<const HistogramCube> patch, std::span<const HistogramCube> background,
                             std::size_t half_width) {
    const auto profile = clipped_difference_profile(patch, background);
    std::size_t peak = 0;
    for (std::size_t t = 1; t < profile.size(); ++t) {
        if (profile[t] > profile[peak]) peak = t;
    }
    if (profile[peak] <= 0.0) {
        throw Error(ErrorKind::NoSignal, "patch-present scan never exceeds background in any bin");
    }
    const std::size_t last = profile.size() - 1;
    return {peak > half_width ? peak - half_width : 0, std::min(last, peak + half_width)};
}

std::map<std::size_t, double> peak_normalize(const std::map<std::size_t, double>& values) {
    double peak = 0.0;
    for (const auto& [k, v] : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::Precondition, "response at scan index " + std::to_string(k) +
                                                     " is negative or not finite");
        }
        peak = std::max(peak, v);
    }
    if (peak <= 0.0) throw Error(ErrorKind::DegenerateMap, "all responses are zero; peak normalization undefined");
    std::map<std::size_t, double> out;
    for (const auto& [k, v] : values) out.emplace_hint(out.end(), k, v / peak);
    return out;
}

}  // namespace diffcal
