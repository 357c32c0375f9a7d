#pragma once

#include "diffcal/core.hpp"
#include "diffcal/error.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace diffcal {

enum class CubeKind { PatchPresent, Background };

std::string_view to_string(CubeKind kind) noexcept;

/// Per-scan-point stack of P x T photon histograms, stored pixel-major
/// (row p holds bins 0..T-1).
template <typename Count>
struct BasicCube {
    std::size_t pixel_count = 0;
    std::size_t bin_count = 0;
    std::size_t scan_index = 0;
    CubeKind kind = CubeKind::PatchPresent;
    std::vector<Count> counts;

    BasicCube() = default;
    BasicCube(std::size_t pixels, std::size_t bins, std::size_t k, CubeKind kind_)
        : pixel_count(pixels), bin_count(bins), scan_index(k), kind(kind_), counts(pixels * bins, Count{}) {}

    Count& at(std::size_t p, std::size_t t) { return counts[p * bin_count + t]; }
    const Count& at(std::size_t p, std::size_t t) const { return counts[p * bin_count + t]; }

    std::span<const Count> pixel(std::size_t p) const {
        return std::span<const Count>(counts).subspan(p * bin_count, bin_count);
    }
    std::span<Count> pixel(std::size_t p) { return std::span<Count>(counts).subspan(p * bin_count, bin_count); }

    friend bool operator==(const BasicCube&, const BasicCube&) = default;
};

/// Integer photon counts as delivered by the sensor.
using HistogramCube = BasicCube<std::uint32_t>;
/// Pre-noise expected counts from the forward model.
using ExpectedCube = BasicCube<double>;

/// Inclusive range of bin indices.
struct BinWindow {
    std::size_t lo = 0;
    std::size_t hi = 0;

    std::size_t width() const noexcept { return hi - lo + 1; }
    void validate(std::size_t bin_count) const;
    friend bool operator==(const BinWindow&, const BinWindow&) = default;
};

/// Checks a cube against the sensor: shape, and every count within
/// [0, max_count].
void validate_cube(const HistogramCube& cube, const SensorConfig& sensor);

/// max over t in window of [h(t) - bg(t)]_+ for one pixel's histograms.
template <typename Count>
double windowed_response(std::span<const Count> h, std::span<const Count> bg, const BinWindow& window) {
    if (h.size() != bg.size()) throw Error(ErrorKind::Consistency, "histogram lengths differ");
    window.validate(h.size());
    double best = 0.0;
    for (std::size_t t = window.lo; t <= window.hi; ++t) {
        const double diff = static_cast<double>(h[t]) - static_cast<double>(bg[t]);
        best = std::max(best, std::max(diff, 0.0));
    }
    return best;
}

/// Background-subtracted windowed maximum for pixel p of a scan-point pair.
template <typename Count>
double patch_response(const BasicCube<Count>& h, const BasicCube<Count>& bg, const BinWindow& window,
                      std::size_t p) {
    if (h.kind != CubeKind::PatchPresent || bg.kind != CubeKind::Background) {
        throw Error(ErrorKind::Consistency, "patch_response expects a patch-present and a background cube");
    }
    if (h.scan_index != bg.scan_index) {
        throw Error(ErrorKind::Consistency, "scan index mismatch: " + std::to_string(h.scan_index) + " vs " +
                                                std::to_string(bg.scan_index));
    }
    if (h.pixel_count != bg.pixel_count || h.bin_count != bg.bin_count) {
        throw Error(ErrorKind::Consistency, "cube shapes differ at scan index " + std::to_string(h.scan_index));
    }
    if (p >= h.pixel_count) {
        throw Error(ErrorKind::Range, "pixel " + std::to_string(p) + " outside " + std::to_string(h.pixel_count));
    }
    return windowed_response(h.pixel(p), bg.pixel(p), window);
}

/// Picks the global depth window: the bin maximizing the summed clipped
/// difference over all pixels and scan points (lowest bin on ties),
/// widened by half_width and clamped to [0, T-1].
BinWindow auto_select_window(std::span<const HistogramCube> patch, std::span<const HistogramCube> background,
                             std::size_t half_width);

/// Summed clipped difference d[t] used by auto_select_window.
std::vector<double> clipped_difference_profile(std::span<const HistogramCube> patch,
                                               std::span<const HistogramCube> background);

/// Divides every value by the maximum value.
std::map<std::size_t, double> peak_normalize(const std::map<std::size_t, double>& values);

}  // namespace diffcal
