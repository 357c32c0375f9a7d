#pragma once

#include "diffcal/core.hpp"
#include "diffcal/image.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace diffcal {

struct HoughParams {
    std::size_t r_min = 3;
    std::size_t r_max = 15;
    /// Edge pixels need magnitude >= gradient_threshold * (max magnitude).
    double gradient_threshold = 0.25;
    /// Absolute floor on Sobel magnitude for edge pixels. Keeps sensor and
    /// scene texture from voting on frames with no patch.
    double min_gradient = 0.2;
    std::size_t vote_threshold = 8;
    std::size_t blur_radius = 1;
    std::size_t max_candidates = 32;

    /// Checks parameter ranges; pass frame dimensions to also check r_max.
    void validate() const;
    void validate(std::size_t width, std::size_t height) const;
};

struct PatchDetection {
    std::size_t scan_index = 0;
    bool valid = false;
    Point2d center;  // meaningful only when valid
    double radius = 0.0;
    std::size_t votes = 0;

    static PatchDetection invalid(std::size_t k) { return PatchDetection{k, false, {}, 0.0, 0}; }
    friend bool operator==(const PatchDetection&, const PatchDetection&) = default;
};

struct GradientField {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> gx;
    std::vector<double> gy;

    double magnitude(std::size_t x, std::size_t y) const;
    double direction(std::size_t x, std::size_t y) const;
};

struct CircleCandidate {
    Point2d center;            // sub-pixel refined
    std::size_t cell_x = 0;    // accumulator peak
    std::size_t cell_y = 0;
    std::size_t radius_bin = 0;
    double radius = 0.0;       // refined
    std::size_t votes = 0;

    friend bool operator==(const CircleCandidate&, const CircleCandidate&) = default;
};

/// Rec. 601 luma of an 8-bit RGB frame, scaled to [0, 1].
GrayImage to_grayscale(const RgbImage& frame);

/// Box blur of the given radius followed by 3x3 Sobel. Borders replicate
/// the nearest edge pixel.
GradientField gradient_field(const GrayImage& img, std::size_t blur_radius);

GrayImage box_blur(const GrayImage& img, std::size_t radius);

/// Gradient-directed circle Hough transform. Candidates are accumulator
/// local maxima after suppressing weaker peaks whose centers fall inside a
/// stronger circle, ordered by (votes desc, radius asc, y asc, x asc).
std::vector<CircleCandidate> hough_circles(const GradientField& grad, const HoughParams& params);

/// Full detection chain for one frame. Frames without a patch yield an
/// invalid detection, never an exception.
PatchDetection detect_patch(const RgbImage& frame, const HoughParams& params, std::size_t scan_index = 0,
                            const std::optional<RgbFrameSpec>& expected = std::nullopt);

}  // namespace diffcal
