#include "diffcal/response_map.hpp"

#include "diffcal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace diffcal {

std::size_t ResponseMap::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

double ResponseMap::peak() const noexcept {
    double best = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (valid[i]) best = std::max(best, values[i]);
    }
    return best;
}

std::size_t SupportMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

ResponseMap assemble_map(const std::map<std::size_t, double>& responses, std::span<const PatchDetection> detections,
                         const GridSpec& grid, std::size_t pixel) {
    const std::size_t K = grid.size();
    std::vector<const PatchDetection*> by_index(K, nullptr);
    for (const auto& det : detections) {
        if (det.scan_index >= K) {
            throw Error(ErrorKind::Range, "detection scan index " + std::to_string(det.scan_index) + " outside grid");
        }
        by_index[det.scan_index] = &det;
    }

    std::vector<std::size_t> missing;
    for (std::size_t k = 0; k < K; ++k) {
        if (!by_index[k] || !responses.contains(k)) missing.push_back(k);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
            list += (i ? ", " : "") + std::to_string(missing[i]);
        }
        if (missing.size() > 20) list += ", ... (" + std::to_string(missing.size()) + " total)";
        throw Error(ErrorKind::IncompleteDataset, "pixel " + std::to_string(pixel) + " missing scan indices: " + list);
    }

    ResponseMap map;
    map.pixel = pixel;
    map.grid = grid;
    map.values.assign(K, 0.0);
    map.valid.assign(K, false);
    map.anchors.assign(K, std::nullopt);
    for (std::size_t k = 0; k < K; ++k) {
        const auto offset = map.cell_offset(snake_index_to_cell(k, grid));
        const PatchDetection& det = *by_index[k];
        if (!det.valid) continue;
        const double v = responses.at(k);
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::Precondition, "response at scan index " + std::to_string(k) + " is negative");
        }
        map.values[offset] = v;
        map.valid[offset] = true;
        map.anchors[offset] = det.center;
    }
    return map;
}

ResponseMap normalize_map(const ResponseMap& map) {
    const double peak = map.peak();
    if (peak <= 0.0) {
        throw Error(ErrorKind::DegenerateMap, "pixel " + std::to_string(map.pixel) + " has no positive valid cell");
    }
    ResponseMap out = map;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = out.valid[i] ? out.values[i] / peak : 0.0;
    }
    out.normalized = true;
    return out;
}

std::vector<double> median_filter_valid(const ResponseMap& map) {
    const auto rows = map.grid.rows;
    const auto cols = map.grid.cols;
    std::vector<double> out(map.values.size(), 0.0);
    std::vector<double> window;
    window.reserve(9);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (!map.valid[r * cols + c]) continue;
            window.clear();
            for (std::size_t rr = (r ? r - 1 : 0); rr <= std::min(rows - 1, r + 1); ++rr) {
                for (std::size_t cc = (c ? c - 1 : 0); cc <= std::min(cols - 1, c + 1); ++cc) {
                    if (map.valid[rr * cols + cc]) window.push_back(map.values[rr * cols + cc]);
                }
            }
            std::sort(window.begin(), window.end());
            const std::size_t n = window.size();
            out[r * cols + c] = (n % 2 == 1) ? window[n / 2] : 0.5 * (window[n / 2 - 1] + window[n / 2]);
        }
    }
    return out;
}

SupportMask support_mask(const ResponseMap& map, double rel_threshold) {
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
        throw Error(ErrorKind::Config, "support threshold must lie in (0, 1)");
    }
    if (map.peak() <= 0.0) {
        throw Error(ErrorKind::DegenerateMap, "pixel " + std::to_string(map.pixel) + " has no positive valid cell");
    }
    const auto filtered = median_filter_valid(map);
    const double peak = *std::max_element(filtered.begin(), filtered.end());
    if (peak <= 0.0) {
        throw Error(ErrorKind::DegenerateMap,
                    "pixel " + std::to_string(map.pixel) + " is zero everywhere after median filtering");
    }
    SupportMask mask{map.pixel, map.grid, std::vector<bool>(filtered.size(), false)};
    const double cut = rel_threshold * peak;
    for (std::size_t i = 0; i < filtered.size(); ++i) {
        mask.mask[i] = map.valid[i] && filtered[i] >= cut;
    }
    return mask;
}

Point2d centroid(const ResponseMap& map) {
    double mass = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        if (!map.valid[i] || map.values[i] <= 0.0) continue;
        const Point2d& a = *map.anchors[i];
        mass += map.values[i];
        sx += map.values[i] * a.x;
        sy += map.values[i] * a.y;
    }
    if (mass <= 0.0) {
        throw Error(ErrorKind::DegenerateMap, "pixel " + std::to_string(map.pixel) + " has no positive valid cell");
    }
    return {sx / mass, sy / mass};
}

double iou(const SupportMask& a, const SupportMask& b) {
    if (a.grid != b.grid || a.mask.size() != b.mask.size()) {
        throw Error(ErrorKind::Consistency, "support masks are on different grids");
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.mask.size(); ++i) {
        inter += (a.mask[i] && b.mask[i]) ? 1 : 0;
        uni += (a.mask[i] || b.mask[i]) ? 1 : 0;
    }
    if (uni == 0) throw Error(ErrorKind::UndefinedIou, "both support masks are empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double cosine_similarity(const ResponseMap& a, const ResponseMap& b) {
    if (a.grid != b.grid || a.values.size() != b.values.size()) {
        throw Error(ErrorKind::Consistency, "response maps are on different grids");
    }
    if (!a.normalized || !b.normalized) {
        throw Error(ErrorKind::Precondition, "cosine similarity expects peak-normalized maps");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    std::size_t joint = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (!a.valid[i] || !b.valid[i]) continue;
        ++joint;
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (joint == 0) throw Error(ErrorKind::DegenerateInput, "maps share no jointly valid cell");
    if (na <= 0.0 || nb <= 0.0) throw Error(ErrorKind::DegenerateInput, "map is zero on the jointly valid cells");
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

MetricSummary summarize(std::span<const std::optional<double>> values) {
    MetricSummary s;
    double sum = 0.0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++s.defined;
        } else {
            ++s.undefined;
        }
    }
    if (s.defined == 0) {
        s.mean = std::nan("");
        s.stddev = std::nan("");
        return s;
    }
    s.mean = sum / static_cast<double>(s.defined);
    if (s.defined > 1) {
        double ss = 0.0;
        for (const auto& v : values) {
            if (v) ss += (*v - s.mean) * (*v - s.mean);
        }
        s.stddev = std::sqrt(ss / static_cast<double>(s.defined - 1));
    }
    return s;
}

namespace {

bool is_degenerate(ErrorKind kind) {
    return kind == ErrorKind::DegenerateMap || kind == ErrorKind::DegenerateInput || kind == ErrorKind::UndefinedIou;
}

template <typename Fn>
std::optional<double> guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (is_degenerate(e.kind())) return std::nullopt;
        throw;
    }
}

}  // namespace

ConsistencyReport compare_modes(std::span<const ResponseMap> set_a, std::span<const ResponseMap> set_b,
                                double rel_threshold) {
    if (set_a.size() != set_b.size()) {
        throw Error(ErrorKind::Consistency, "map sets have different pixel counts: " + std::to_string(set_a.size()) +
                                                " vs " + std::to_string(set_b.size()));
    }
    if (set_a.empty()) throw Error(ErrorKind::Precondition, "no maps to compare");
    ConsistencyReport report;
    report.rel_threshold = rel_threshold;
    for (std::size_t p = 0; p < set_a.size(); ++p) {
        const auto& a = set_a[p];
        const auto& b = set_b[p];
        if (a.grid != b.grid) throw Error(ErrorKind::Consistency, "pixel " + std::to_string(p) + " grids differ");
        if (!a.normalized || !b.normalized) {
            throw Error(ErrorKind::Precondition, "pixel " + std::to_string(p) + " maps are not peak-normalized");
        }
        report.invalid_cells_a += a.values.size() - a.valid_count();
        report.invalid_cells_b += b.values.size() - b.valid_count();

        PixelConsistency entry;
        entry.pixel = p;
        entry.iou = guarded([&] { return iou(support_mask(a, rel_threshold), support_mask(b, rel_threshold)); });
        entry.centroid_displacement = guarded([&] {
            const Point2d ca = centroid(a);
            const Point2d cb = centroid(b);
            return std::hypot(ca.x - cb.x, ca.y - cb.y);
        });
        entry.cosine = guarded([&] { return cosine_similarity(a, b); });
        report.pixels.push_back(entry);
    }

    std::vector<std::optional<double>> ious, disps, coss;
    for (const auto& e : report.pixels) {
        ious.push_back(e.iou);
        disps.push_back(e.centroid_displacement);
        coss.push_back(e.cosine);
    }
    report.iou = summarize(ious);
    report.centroid_displacement = summarize(disps);
    report.cosine = summarize(coss);
    return report;
}

}  // namespace diffcal
