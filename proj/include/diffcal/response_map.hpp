#pragma once

#include "diffcal/core.hpp"
#include "diffcal/patch_detect.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace diffcal {

/// Responses of one LiDAR pixel laid out on the scan grid (row-major,
/// rows x cols). Invalid cells hold 0 and carry no anchor.
struct ResponseMap {
    std::size_t pixel = 0;
    GridSpec grid;
    std::vector<double> values;
    std::vector<bool> valid;
    std::vector<std::optional<Point2d>> anchors;
    bool normalized = false;

    std::size_t cell_offset(GridCell c) const noexcept { return c.row * grid.cols + c.col; }
    double value(GridCell c) const { return values[cell_offset(c)]; }
    bool is_valid(GridCell c) const { return valid[cell_offset(c)]; }
    std::size_t valid_count() const noexcept;
    /// Largest value over valid cells (0 if none).
    double peak() const noexcept;
};

struct SupportMask {
    std::size_t pixel = 0;
    GridSpec grid;
    std::vector<bool> mask;

    std::size_t count() const noexcept;
};

ResponseMap assemble_map(const std::map<std::size_t, double>& responses, std::span<const PatchDetection> detections,
                         const GridSpec& grid, std::size_t pixel);

/// Peak normalization over valid cells.
ResponseMap normalize_map(const ResponseMap& map);

/// 3x3 median over valid neighbors (mean of the two middle values for an
/// even count); invalid cells stay 0.
std::vector<double> median_filter_valid(const ResponseMap& map);

inline constexpr double default_rel_threshold = 0.05;

SupportMask support_mask(const ResponseMap& map, double rel_threshold = default_rel_threshold);

/// Response-weighted mean of the anchors of valid cells, in RGB pixels.
Point2d centroid(const ResponseMap& map);

double iou(const SupportMask& a, const SupportMask& b);

/// Cosine similarity over cells valid in both maps.
double cosine_similarity(const ResponseMap& a, const ResponseMap& b);

struct PixelConsistency {
    std::size_t pixel = 0;
    std::optional<double> iou;
    std::optional<double> centroid_displacement;
    std::optional<double> cosine;
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 when fewer than two entries
    std::size_t defined = 0;
    std::size_t undefined = 0;
};

struct ConsistencyReport {
    double rel_threshold = default_rel_threshold;
    std::vector<PixelConsistency> pixels;
    MetricSummary iou;
    MetricSummary centroid_displacement;
    MetricSummary cosine;
    std::size_t invalid_cells_a = 0;
    std::size_t invalid_cells_b = 0;
};

/// Mean and sample std of the defined entries.
MetricSummary summarize(std::span<const std::optional<double>> values);

ConsistencyReport compare_modes(std::span<const ResponseMap> set_a, std::span<const ResponseMap> set_b,
                                double rel_threshold = default_rel_threshold);

}  // namespace diffcal
