#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace diffcal {

/// Pixel aggregation layouts offered by the sensor.
enum class Layout { Wide3x3, Grid4x4, Grid3x6, Grid8x8 };

/// Ranging configuration. Recorded for provenance only; no processing stage
/// branches on it.
enum class RangingMode { Short, Long };

std::string_view to_string(Layout layout) noexcept;
std::string_view to_string(RangingMode mode) noexcept;
Layout parse_layout(std::string_view text);
RangingMode parse_ranging_mode(std::string_view text);

/// Number of reported pixels for a layout (9, 16, 18, 64).
std::size_t layout_pixel_count(Layout layout) noexcept;

struct SensorConfig {
    std::size_t pixel_count = 9;
    std::size_t bin_count = 128;
    Layout layout = Layout::Wide3x3;
    RangingMode ranging_mode = RangingMode::Short;
    std::uint32_t max_count = 65535;

    void validate() const;
    friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

enum class ScanOrder { SnakeRowMajor };

std::string_view to_string(ScanOrder order) noexcept;
ScanOrder parse_scan_order(std::string_view text);

/// Scan grid. Index k runs over rows*cols cells in snake order: even rows
/// left to right, odd rows right to left.
struct GridSpec {
    std::size_t cols = 80;
    std::size_t rows = 45;
    ScanOrder order = ScanOrder::SnakeRowMajor;

    std::size_t size() const noexcept { return cols * rows; }
    void validate() const;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct RgbFrameSpec {
    std::size_t width = 848;
    std::size_t height = 480;

    void validate() const;
    friend bool operator==(const RgbFrameSpec&, const RgbFrameSpec&) = default;
};

struct GridCell {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Continuous RGB-plane coordinate in pixels. Pixel (i, j) has its center
/// at (i, j).
struct Point2d {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2d&, const Point2d&) = default;
};

GridCell snake_index_to_cell(std::size_t k, const GridSpec& grid);
std::size_t snake_cell_to_index(GridCell cell, const GridSpec& grid);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Work is split into contiguous chunks; the first exception
/// thrown by any worker is rethrown on the caller's thread.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

unsigned resolve_thread_count(unsigned requested) noexcept;

}  // namespace diffcal
