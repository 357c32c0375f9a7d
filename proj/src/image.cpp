#include "diffcal/image.hpp"

namespace diffcal {

RgbImage::RgbImage(std::size_t w, std::size_t h, Rgb8 fill) : width(w), height(h), data(w * h * 3) {
    for (std::size_t i = 0; i < w * h; ++i) {
        data[3 * i] = fill[0];
        data[3 * i + 1] = fill[1];
        data[3 * i + 2] = fill[2];
    }
}

Rgb8 RgbImage::get(std::size_t x, std::size_t y) const {
    const std::size_t i = 3 * (y * width + x);
    return {data[i], data[i + 1], data[i + 2]};
}

void RgbImage::set(std::size_t x, std::size_t y, Rgb8 color) {
    const std::size_t i = 3 * (y * width + x);
    data[i] = color[0];
    data[i + 1] = color[1];
    data[i + 2] = color[2];
}

}  // namespace diffcal
