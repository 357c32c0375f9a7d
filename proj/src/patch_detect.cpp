#include "diffcal/patch_detect.hpp"

#include "diffcal/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace diffcal {

void HoughParams::validate() const {
    if (r_min < 1 || r_min > r_max) throw Error(ErrorKind::Config, "hough radius range requires 1 <= r_min <= r_max");
    if (!(gradient_threshold > 0.0 && gradient_threshold <= 1.0)) {
        throw Error(ErrorKind::Config, "gradient_threshold must lie in (0, 1]");
    }
    if (!(min_gradient >= 0.0)) throw Error(ErrorKind::Config, "min_gradient must be >= 0");
    if (max_candidates < 1) throw Error(ErrorKind::Config, "max_candidates must be >= 1");
}

void HoughParams::validate(std::size_t width, std::size_t height) const {
    validate();
    if (2 * r_max >= std::min(width, height)) {
        throw Error(ErrorKind::Config, "r_max " + std::to_string(r_max) + " must be below half the smaller frame side");
    }
}

double GradientField::magnitude(std::size_t x, std::size_t y) const {
    const std::size_t i = y * width + x;
    return std::hypot(gx[i], gy[i]);
}

double GradientField::direction(std::size_t x, std::size_t y) const {
    const std::size_t i = y * width + x;
    return std::atan2(gy[i], gx[i]);
}

GrayImage to_grayscale(const RgbImage& frame) {
    if (frame.empty() || frame.data.size() != frame.width * frame.height * 3) {
        throw Error(ErrorKind::Shape, "frame is empty or its buffer does not match its dimensions");
    }
    GrayImage out(frame.width, frame.height);
    for (std::size_t i = 0; i < frame.width * frame.height; ++i) {
        const double r = frame.data[3 * i] / 255.0;
        const double g = frame.data[3 * i + 1] / 255.0;
        const double b = frame.data[3 * i + 2] / 255.0;
        out.data[i] = std::clamp(0.299 * r + 0.587 * g + 0.114 * b, 0.0, 1.0);
    }
    return out;
}

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
    if (i < 0) return 0;
    if (static_cast<std::size_t>(i) >= n) return n - 1;
    return static_cast<std::size_t>(i);
}

}  // namespace

GrayImage box_blur(const GrayImage& img, std::size_t radius) {
    if (radius == 0) return img;
    const auto w = img.width;
    const auto h = img.height;
    const auto r = static_cast<std::ptrdiff_t>(radius);
    const double norm = 1.0 / static_cast<double>(2 * radius + 1);

    // Separable: horizontal then vertical pass.
    GrayImage tmp(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double sum = 0.0;
            for (std::ptrdiff_t d = -r; d <= r; ++d) {
                sum += img.at(clamp_index(static_cast<std::ptrdiff_t>(x) + d, w), y);
            }
            tmp.at(x, y) = sum * norm;
        }
    }
    GrayImage out(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double sum = 0.0;
            for (std::ptrdiff_t d = -r; d <= r; ++d) {
                sum += tmp.at(x, clamp_index(static_cast<std::ptrdiff_t>(y) + d, h));
            }
            out.at(x, y) = sum * norm;
        }
    }
    return out;
}

GradientField gradient_field(const GrayImage& img, std::size_t blur_radius) {
    if (img.width == 0 || img.height == 0 || img.data.size() != img.width * img.height) {
        throw Error(ErrorKind::Shape, "gray image is empty or malformed");
    }
    const GrayImage smooth = box_blur(img, blur_radius);
    const auto w = img.width;
    const auto h = img.height;
    GradientField field{w, h, std::vector<double>(w * h), std::vector<double>(w * h)};
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t ym = clamp_index(static_cast<std::ptrdiff_t>(y) - 1, h);
        const std::size_t yp = clamp_index(static_cast<std::ptrdiff_t>(y) + 1, h);
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t xm = clamp_index(static_cast<std::ptrdiff_t>(x) - 1, w);
            const std::size_t xp = clamp_index(static_cast<std::ptrdiff_t>(x) + 1, w);
            const double gx = (smooth.at(xp, ym) + 2.0 * smooth.at(xp, y) + smooth.at(xp, yp)) -
                              (smooth.at(xm, ym) + 2.0 * smooth.at(xm, y) + smooth.at(xm, yp));
            const double gy = (smooth.at(xm, yp) + 2.0 * smooth.at(x, yp) + smooth.at(xp, yp)) -
                              (smooth.at(xm, ym) + 2.0 * smooth.at(x, ym) + smooth.at(xp, ym));
            field.gx[y * w + x] = gx;
            field.gy[y * w + x] = gy;
        }
    }
    return field;
}

namespace {

struct Accumulator {
    std::size_t x0, y0, w, h, radii;
    std::vector<std::uint32_t> votes;

    std::uint32_t at(std::size_t x, std::size_t y, std::size_t r) const { return votes[(r * h + y) * w + x]; }
    std::uint32_t& at(std::size_t x, std::size_t y, std::size_t r) { return votes[(r * h + y) * w + x]; }
};

// Strict ranking: more votes first, then smaller radius, then smaller y, then smaller x.
bool ranks_before(std::uint32_t va, std::size_t ra, std::size_t ya, std::size_t xa, std::uint32_t vb,
                  std::size_t rb, std::size_t yb, std::size_t xb) {
    if (va != vb) return va > vb;
    if (ra != rb) return ra < rb;
    if (ya != yb) return ya < yb;
    return xa < xb;
}

}  // namespace

std::vector<CircleCandidate> hough_circles(const GradientField& grad, const HoughParams& params) {
    params.validate(grad.width, grad.height);
    const auto w = grad.width;
    const auto h = grad.height;

    std::vector<double> magnitude(w * h);
    double max_mag = 0.0;
    for (std::size_t i = 0; i < w * h; ++i) {
        magnitude[i] = std::sqrt(grad.gx[i] * grad.gx[i] + grad.gy[i] * grad.gy[i]);
        max_mag = std::max(max_mag, magnitude[i]);
    }
    const double edge_cut = std::max(params.gradient_threshold * max_mag, params.min_gradient);
    if (max_mag <= 0.0 || max_mag < edge_cut) return {};

    std::vector<std::size_t> edges;
    std::size_t bx0 = w, by0 = h, bx1 = 0, by1 = 0;
    for (std::size_t i = 0; i < w * h; ++i) {
        if (magnitude[i] > 0.0 && magnitude[i] >= edge_cut) {
            edges.push_back(i);
            bx0 = std::min(bx0, i % w);
            bx1 = std::max(bx1, i % w);
            by0 = std::min(by0, i / w);
            by1 = std::max(by1, i / w);
        }
    }
    if (edges.empty()) return {};

    // Centers can lie at most r_max from an edge pixel; restrict the
    // accumulator to that box inside the frame.
    const std::size_t rmax = params.r_max;
    Accumulator acc;
    acc.x0 = bx0 > rmax ? bx0 - rmax : 0;
    acc.y0 = by0 > rmax ? by0 - rmax : 0;
    acc.w = std::min(w - 1, bx1 + rmax) - acc.x0 + 1;
    acc.h = std::min(h - 1, by1 + rmax) - acc.y0 + 1;
    acc.radii = params.r_max - params.r_min + 1;
    acc.votes.assign(acc.w * acc.h * acc.radii, 0);

    for (const std::size_t i : edges) {
        const double ex = static_cast<double>(i % w);
        const double ey = static_cast<double>(i / w);
        const double c = grad.gx[i] / magnitude[i];
        const double s = grad.gy[i] / magnitude[i];
        for (std::size_t ri = 0; ri < acc.radii; ++ri) {
            const double r = static_cast<double>(params.r_min + ri);
            for (const double sign : {1.0, -1.0}) {
                const double cx = std::round(ex + sign * r * c) - static_cast<double>(acc.x0);
                const double cy = std::round(ey + sign * r * s) - static_cast<double>(acc.y0);
                if (cx < 0.0 || cy < 0.0 || cx >= static_cast<double>(acc.w) || cy >= static_cast<double>(acc.h)) {
                    continue;
                }
                ++acc.at(static_cast<std::size_t>(cx), static_cast<std::size_t>(cy), ri);
            }
        }
    }

    std::vector<CircleCandidate> peaks;
    for (std::size_t ri = 0; ri < acc.radii; ++ri) {
        for (std::size_t y = 0; y < acc.h; ++y) {
            for (std::size_t x = 0; x < acc.w; ++x) {
                const std::uint32_t v = acc.at(x, y, ri);
                if (v == 0) continue;
                bool is_peak = true;
                for (std::ptrdiff_t dr = -1; dr <= 1 && is_peak; ++dr) {
                    for (std::ptrdiff_t dy = -1; dy <= 1 && is_peak; ++dy) {
                        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                            if (dr == 0 && dy == 0 && dx == 0) continue;
                            const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(ri) + dr;
                            const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(y) + dy;
                            const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(x) + dx;
                            if (nr < 0 || ny < 0 || nx < 0 || nr >= static_cast<std::ptrdiff_t>(acc.radii) ||
                                ny >= static_cast<std::ptrdiff_t>(acc.h) || nx >= static_cast<std::ptrdiff_t>(acc.w)) {
                                continue;
                            }
                            const auto ur = static_cast<std::size_t>(nr);
                            const auto uy = static_cast<std::size_t>(ny);
                            const auto ux = static_cast<std::size_t>(nx);
                            if (ranks_before(acc.at(ux, uy, ur), ur, uy, ux, v, ri, y, x)) {
                                is_peak = false;
                                break;
                            }
                        }
                    }
                }
                if (!is_peak) continue;

                CircleCandidate cand;
                cand.cell_x = acc.x0 + x;
                cand.cell_y = acc.y0 + y;
                cand.radius_bin = params.r_min + ri;
                cand.votes = v;

                // Vote-weighted 3x3 centroid in the peak's radius slice.
                double sw = 0.0, sx = 0.0, sy = 0.0;
                for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                    for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                        const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(y) + dy;
                        const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(x) + dx;
                        if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(acc.h) ||
                            nx >= static_cast<std::ptrdiff_t>(acc.w)) {
                            continue;
                        }
                        const double wv = acc.at(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), ri);
                        sw += wv;
                        sx += wv * static_cast<double>(acc.x0 + static_cast<std::size_t>(nx));
                        sy += wv * static_cast<double>(acc.y0 + static_cast<std::size_t>(ny));
                    }
                }
                cand.center = {sx / sw, sy / sw};

                double rw = 0.0, rs = 0.0;
                for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
                    const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(ri) + dr;
                    if (nr < 0 || nr >= static_cast<std::ptrdiff_t>(acc.radii)) continue;
                    const double wv = acc.at(x, y, static_cast<std::size_t>(nr));
                    rw += wv;
                    rs += wv * static_cast<double>(params.r_min + static_cast<std::size_t>(nr));
                }
                cand.radius = rs / rw;
                peaks.push_back(cand);
            }
        }
    }

    std::sort(peaks.begin(), peaks.end(), [](const CircleCandidate& a, const CircleCandidate& b) {
        return ranks_before(static_cast<std::uint32_t>(a.votes), a.radius_bin, a.cell_y, a.cell_x,
                            static_cast<std::uint32_t>(b.votes), b.radius_bin, b.cell_y, b.cell_x);
    });

    std::vector<CircleCandidate> accepted;
    for (const auto& cand : peaks) {
        const bool inside_stronger = std::any_of(accepted.begin(), accepted.end(), [&](const CircleCandidate& a) {
            const double dx = static_cast<double>(cand.cell_x) - static_cast<double>(a.cell_x);
            const double dy = static_cast<double>(cand.cell_y) - static_cast<double>(a.cell_y);
            return std::hypot(dx, dy) <= static_cast<double>(a.radius_bin);
        });
        if (inside_stronger) continue;
        accepted.push_back(cand);
        if (accepted.size() >= params.max_candidates) break;
    }
    return accepted;
}

PatchDetection detect_patch(const RgbImage& frame, const HoughParams& params, std::size_t scan_index,
                            const std::optional<RgbFrameSpec>& expected) {
    if (expected && (frame.width != expected->width || frame.height != expected->height)) {
        throw Error(ErrorKind::Consistency, "frame for scan index " + std::to_string(scan_index) + " is " +
                                                std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                                                ", manifest declares " + std::to_string(expected->width) + "x" +
                                                std::to_string(expected->height));
    }
    const auto gray = to_grayscale(frame);
    const auto grad = gradient_field(gray, params.blur_radius);
    const auto candidates = hough_circles(grad, params);
    if (candidates.empty() || candidates.front().votes < params.vote_threshold) {
        return PatchDetection::invalid(scan_index);
    }
    const auto& top = candidates.front();
    PatchDetection det;
    det.scan_index = scan_index;
    det.valid = true;
    det.center = top.center;
    det.radius = std::clamp(top.radius, static_cast<double>(params.r_min), static_cast<double>(params.r_max));
    det.votes = top.votes;
    return det;
}

}  // namespace diffcal
