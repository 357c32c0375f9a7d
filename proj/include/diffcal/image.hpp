#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace diffcal {

using Rgb8 = std::array<std::uint8_t, 3>;

/// 8-bit interleaved RGB raster.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> data;  // width * height * 3

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h, Rgb8 fill = {0, 0, 0});

    bool empty() const noexcept { return width == 0 || height == 0; }
    Rgb8 get(std::size_t x, std::size_t y) const;
    void set(std::size_t x, std::size_t y, Rgb8 color);

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Single-channel intensity image in [0, 1].
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), data(w * h, fill) {}

    double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
    double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
};

}  // namespace diffcal
