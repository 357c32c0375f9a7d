#include "diffcal/core.hpp"

#include "diffcal/error.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace diffcal {

std::string_view to_string(Layout layout) noexcept {
    switch (layout) {
    case Layout::Wide3x3: return "3x3-wide";
    case Layout::Grid4x4: return "4x4";
    case Layout::Grid3x6: return "3x6";
    case Layout::Grid8x8: return "8x8";
    }
    return "3x3-wide";
}

std::string_view to_string(RangingMode mode) noexcept {
    return mode == RangingMode::Short ? "short" : "long";
}

Layout parse_layout(std::string_view text) {
    for (Layout l : {Layout::Wide3x3, Layout::Grid4x4, Layout::Grid3x6, Layout::Grid8x8}) {
        if (text == to_string(l)) return l;
    }
    throw Error(ErrorKind::Config, "unknown layout '" + std::string(text) + "'");
}

RangingMode parse_ranging_mode(std::string_view text) {
    if (text == "short") return RangingMode::Short;
    if (text == "long") return RangingMode::Long;
    throw Error(ErrorKind::Config, "unknown ranging mode '" + std::string(text) + "'");
}

std::size_t layout_pixel_count(Layout layout) noexcept {
    switch (layout) {
    case Layout::Wide3x3: return 9;
    case Layout::Grid4x4: return 16;
    case Layout::Grid3x6: return 18;
    case Layout::Grid8x8: return 64;
    }
    return 9;
}

std::string_view to_string(ScanOrder) noexcept { return "snake_row_major"; }

ScanOrder parse_scan_order(std::string_view text) {
    if (text == "snake_row_major") return ScanOrder::SnakeRowMajor;
    throw Error(ErrorKind::Config, "unsupported scan order '" + std::string(text) + "'");
}

void SensorConfig::validate() const {
    if (pixel_count < 1) throw Error(ErrorKind::Config, "pixel_count must be >= 1");
    if (bin_count < 1) throw Error(ErrorKind::Config, "bin_count must be >= 1");
    if (max_count < 1) throw Error(ErrorKind::Config, "max_count must be >= 1");
}

void GridSpec::validate() const {
    if (cols < 1 || rows < 1) throw Error(ErrorKind::Config, "grid cols and rows must be >= 1");
}

void RgbFrameSpec::validate() const {
    if (width < 1 || height < 1) throw Error(ErrorKind::Config, "frame width and height must be >= 1");
}

GridCell snake_index_to_cell(std::size_t k, const GridSpec& grid) {
    if (k >= grid.size()) {
        throw Error(ErrorKind::Range, "scan index " + std::to_string(k) + " outside grid of " +
                                          std::to_string(grid.size()) + " cells");
    }
    const std::size_t row = k / grid.cols;
    const std::size_t offset = k % grid.cols;
    const std::size_t col = (row % 2 == 0) ? offset : grid.cols - 1 - offset;
    return {row, col};
}

std::size_t snake_cell_to_index(GridCell cell, const GridSpec& grid) {
    if (cell.row >= grid.rows || cell.col >= grid.cols) {
        throw Error(ErrorKind::Range, "cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                                          ") outside " + std::to_string(grid.rows) + "x" +
                                          std::to_string(grid.cols) + " grid");
    }
    const std::size_t offset = (cell.row % 2 == 0) ? cell.col : grid.cols - 1 - cell.col;
    return cell.row * grid.cols + offset;
}

unsigned resolve_thread_count(unsigned requested) noexcept {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(resolve_thread_count(threads), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace diffcal
