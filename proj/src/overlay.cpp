#include "diffcal/error.hpp"
#include "diffcal/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace diffcal {

namespace {

struct Stop {
    double at;
    std::array<double, 3> rgb;
};

constexpr std::array<Stop, 5> viridis{{{0.00, {68, 1, 84}},
                                       {0.25, {59, 82, 139}},
                                       {0.50, {33, 145, 140}},
                                       {0.75, {94, 201, 98}},
                                       {1.00, {253, 231, 37}}}};
constexpr std::array<Stop, 4> hot{{{0.0, {0, 0, 0}}, {0.4, {230, 0, 0}}, {0.8, {255, 210, 0}}, {1.0, {255, 255, 255}}}};

template <std::size_t N>
Rgb8 interpolate(const std::array<Stop, N>& stops, double v) {
    for (std::size_t i = 1; i < N; ++i) {
        if (v <= stops[i].at) {
            const double f = (v - stops[i - 1].at) / (stops[i].at - stops[i - 1].at);
            Rgb8 out{};
            for (int c = 0; c < 3; ++c) {
                out[c] = static_cast<std::uint8_t>(
                    std::lround(stops[i - 1].rgb[c] + f * (stops[i].rgb[c] - stops[i - 1].rgb[c])));
            }
            return out;
        }
    }
    const auto& last = stops[N - 1].rgb;
    return {static_cast<std::uint8_t>(last[0]), static_cast<std::uint8_t>(last[1]), static_cast<std::uint8_t>(last[2])};
}

Rgb8 hue_color(std::size_t index, std::size_t count) {
    const double h = 6.0 * static_cast<double>(index) / static_cast<double>(std::max<std::size_t>(count, 1));
    const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
    std::array<double, 3> rgb{};
    switch (static_cast<int>(h) % 6) {
    case 0: rgb = {1, x, 0}; break;
    case 1: rgb = {x, 1, 0}; break;
    case 2: rgb = {0, 1, x}; break;
    case 3: rgb = {0, x, 1}; break;
    case 4: rgb = {x, 0, 1}; break;
    default: rgb = {1, 0, x}; break;
    }
    return {static_cast<std::uint8_t>(std::lround(255 * rgb[0])), static_cast<std::uint8_t>(std::lround(255 * rgb[1])),
            static_cast<std::uint8_t>(std::lround(255 * rgb[2]))};
}

double auto_splat_radius(const ResponseMap& map) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < map.grid.rows; ++r) {
        for (std::size_t c = 0; c + 1 < map.grid.cols; ++c) {
            const auto& a = map.anchors[r * map.grid.cols + c];
            const auto& b = map.anchors[r * map.grid.cols + c + 1];
            if (!a || !b) continue;
            sum += std::hypot(a->x - b->x, a->y - b->y);
            ++n;
        }
    }
    return n ? std::max(1.0, 0.5 * sum / static_cast<double>(n)) : 3.0;
}

// Winning (value, source) per output pixel; larger value wins, ties keep
// the earlier source.
struct SplatBuffer {
    std::vector<double> value;
    std::vector<std::size_t> source;

    SplatBuffer(std::size_t w, std::size_t h) : value(w * h, 0.0), source(w * h, 0) {}
};

void splat(SplatBuffer& buf, const ResponseMap& map, std::size_t source, std::size_t w, std::size_t h,
           double radius) {
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const double v = std::clamp(map.values[i], 0.0, 1.0);
        if (!map.valid[i] || v <= 0.0) continue;
        const Point2d a = *map.anchors[i];
        const auto x0 = static_cast<std::ptrdiff_t>(std::floor(a.x - radius));
        const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(a.x + radius));
        const auto y0 = static_cast<std::ptrdiff_t>(std::floor(a.y - radius));
        const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(a.y + radius));
        for (auto y = std::max<std::ptrdiff_t>(0, y0); y <= std::min<std::ptrdiff_t>(h - 1, y1); ++y) {
            for (auto x = std::max<std::ptrdiff_t>(0, x0); x <= std::min<std::ptrdiff_t>(w - 1, x1); ++x) {
                const double dx = static_cast<double>(x) - a.x;
                const double dy = static_cast<double>(y) - a.y;
                if (dx * dx + dy * dy > radius * radius) continue;
                const std::size_t o = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
                if (v > buf.value[o]) {
                    buf.value[o] = v;
                    buf.source[o] = source;
                }
            }
        }
    }
}

std::uint8_t blend(std::uint8_t base, std::uint8_t top, double alpha) {
    return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * base + alpha * top));
}

void check_overlay_inputs(const ResponseMap& map, const RgbImage& base) {
    if (!map.normalized) {
        throw Error(ErrorKind::Precondition, "pixel " + std::to_string(map.pixel) + " map is not peak-normalized");
    }
    if (base.empty()) throw Error(ErrorKind::Shape, "overlay base image is empty");
}

}  // namespace

std::string_view to_string(Colormap cmap) noexcept {
    switch (cmap) {
    case Colormap::Viridis: return "viridis";
    case Colormap::Hot: return "hot";
    case Colormap::Gray: return "gray";
    }
    return "viridis";
}

Colormap parse_colormap(std::string_view text) {
    for (Colormap c : {Colormap::Viridis, Colormap::Hot, Colormap::Gray}) {
        if (text == to_string(c)) return c;
    }
    throw Error(ErrorKind::Config, "unknown colormap '" + std::string(text) + "'");
}

Rgb8 colormap_lookup(Colormap cmap, double value) {
    const double v = std::clamp(value, 0.0, 1.0);
    switch (cmap) {
    case Colormap::Viridis: return interpolate(viridis, v);
    case Colormap::Hot: return interpolate(hot, v);
    case Colormap::Gray: {
        const auto g = static_cast<std::uint8_t>(std::lround(255.0 * v));
        return {g, g, g};
    }
    }
    return {0, 0, 0};
}

RgbImage render_overlay(const ResponseMap& map, const RgbImage& base, Colormap cmap, double splat_radius) {
    check_overlay_inputs(map, base);
    const double radius = splat_radius > 0.0 ? splat_radius : auto_splat_radius(map);
    SplatBuffer buf(base.width, base.height);
    splat(buf, map, 0, base.width, base.height, radius);
    RgbImage out = base;
    for (std::size_t o = 0; o < buf.value.size(); ++o) {
        const double a = buf.value[o];
        if (a <= 0.0) continue;
        const Rgb8 top = colormap_lookup(cmap, a);
        for (int c = 0; c < 3; ++c) out.data[3 * o + c] = blend(base.data[3 * o + c], top[c], a);
    }
    return out;
}

RgbImage render_composite(std::span<const ResponseMap> maps, const RgbImage& base, double splat_radius) {
    if (maps.empty()) throw Error(ErrorKind::Precondition, "no maps to composite");
    SplatBuffer buf(base.width, base.height);
    for (std::size_t p = 0; p < maps.size(); ++p) {
        check_overlay_inputs(maps[p], base);
        const double radius = splat_radius > 0.0 ? splat_radius : auto_splat_radius(maps[p]);
        splat(buf, maps[p], p, base.width, base.height, radius);
    }
    RgbImage out = base;
    for (std::size_t o = 0; o < buf.value.size(); ++o) {
        const double a = buf.value[o];
        if (a <= 0.0) continue;
        const Rgb8 top = hue_color(buf.source[o], maps.size());
        for (int c = 0; c < 3; ++c) out.data[3 * o + c] = blend(base.data[3 * o + c], top[c], a);
    }
    return out;
}

}  // namespace diffcal
