#include "diffcal/error.hpp"
#include "diffcal/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace diffcal {

using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::vector<std::string_view>> split_csv(const std::string& text) {
    std::vector<std::vector<std::string_view>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

void check_grid_shape(const std::vector<std::vector<std::string_view>>& rows, const GridSpec& grid,
                      const fs::path& path) {
    if (rows.size() != grid.rows) {
        throw Error(ErrorKind::Shape, path.string() + ": " + std::to_string(rows.size()) + " rows, expected " +
                                          std::to_string(grid.rows));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != grid.cols) {
            throw Error(ErrorKind::Shape, path.string() + ": row " + std::to_string(r) + " has " +
                                              std::to_string(rows[r].size()) + " columns, expected " +
                                              std::to_string(grid.cols));
        }
    }
}

std::string pixel_file(std::size_t p, const char* what) {
    return "pixel_" + std::to_string(p) + "_" + what + ".csv";
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : "undefined"; }

}  // namespace

void write_grid_csv(const fs::path& path, const GridSpec& grid, std::span<const double> values) {
    if (values.size() != grid.size()) throw Error(ErrorKind::Shape, "grid value count mismatch for " + path.string());
    std::string out;
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
            if (c) out += ',';
            out += format_real(values[r * grid.cols + c]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<double> read_grid_csv(const fs::path& path, const GridSpec& grid) {
    const std::string text = slurp(path);
    const auto rows = split_csv(text);
    check_grid_shape(rows, grid, path);
    std::vector<double> out;
    out.reserve(grid.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out.push_back(parse_real(rows[r][c], path.string() + " row " + std::to_string(r) + " col " +
                                                     std::to_string(c)));
        }
    }
    return out;
}

void write_mask_csv(const fs::path& path, const GridSpec& grid, const std::vector<bool>& mask) {
    if (mask.size() != grid.size()) throw Error(ErrorKind::Shape, "mask size mismatch for " + path.string());
    std::string out;
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
            if (c) out += ',';
            out += mask[r * grid.cols + c] ? '1' : '0';
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<bool> read_mask_csv(const fs::path& path, const GridSpec& grid) {
    const std::string text = slurp(path);
    const auto rows = split_csv(text);
    check_grid_shape(rows, grid, path);
    std::vector<bool> out;
    out.reserve(grid.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (const auto cell : rows[r]) {
            if (cell != "0" && cell != "1") {
                throw Error(ErrorKind::Parse, path.string() + " row " + std::to_string(r) + ": mask entry '" +
                                                  std::string(cell) + "' is not 0 or 1");
            }
            out.push_back(cell == "1");
        }
    }
    return out;
}

void write_detections_csv(const fs::path& path, std::span<const PatchDetection> detections) {
    std::string out = "k,x,y,radius,votes,valid\n";
    for (const auto& d : detections) {
        out += std::to_string(d.scan_index) + ',';
        if (d.valid) {
            out += format_real(d.center.x) + ',' + format_real(d.center.y) + ',' + format_real(d.radius) + ',' +
                   std::to_string(d.votes) + ",1\n";
        } else {
            out += ",,,0,0\n";
        }
    }
    write_text_file(path, out);
}

std::vector<PatchDetection> read_detections_csv(const fs::path& path) {
    const std::string text = slurp(path);
    const auto rows = split_csv(text);
    if (rows.empty() || rows.front().size() != 6 || rows.front()[0] != "k") {
        throw Error(ErrorKind::Parse, path.string() + ": missing header k,x,y,radius,votes,valid");
    }
    std::vector<PatchDetection> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string ctx = path.string() + " line " + std::to_string(i + 1);
        if (row.size() != 6) throw Error(ErrorKind::Shape, ctx + ": expected 6 fields");
        PatchDetection d;
        d.scan_index = static_cast<std::size_t>(parse_real(row[0], ctx));
        d.valid = row[5] == "1";
        if (d.valid) {
            d.center = {parse_real(row[1], ctx), parse_real(row[2], ctx)};
            d.radius = parse_real(row[3], ctx);
            d.votes = static_cast<std::size_t>(parse_real(row[4], ctx));
        }
        out.push_back(d);
    }
    return out;
}

void save_response_maps(std::span<const ResponseMap> maps, std::span<const SupportMask> masks,
                        std::span<const PatchDetection> detections, const fs::path& out_dir, double rel_threshold) {
    if (maps.empty()) throw Error(ErrorKind::Precondition, "no maps to save");
    if (masks.size() != maps.size()) throw Error(ErrorKind::Consistency, "one support mask per map required");
    ensure_directory(out_dir);
    const GridSpec grid = maps.front().grid;
    for (std::size_t p = 0; p < maps.size(); ++p) {
        const auto& m = maps[p];
        if (m.grid != grid) throw Error(ErrorKind::Consistency, "maps are on different grids");
        write_grid_csv(out_dir / pixel_file(p, "values"), grid, m.values);
        write_mask_csv(out_dir / pixel_file(p, "valid"), grid, m.valid);
        write_mask_csv(out_dir / pixel_file(p, "support"), grid, masks[p].mask);
    }
    write_detections_csv(out_dir / "detections.csv", detections);
    json index = {{"format_version", maps_format_version},
                  {"pixel_count", maps.size()},
                  {"grid", {{"cols", grid.cols}, {"rows", grid.rows}, {"order", std::string(to_string(grid.order))}}},
                  {"normalized", maps.front().normalized},
                  {"rel_threshold", rel_threshold}};
    write_text_file(out_dir / "maps.json", index.dump(2) + "\n");
}

MapSet load_response_maps(const fs::path& dir) {
    const auto index_path = dir / "maps.json";
    GridSpec grid;
    std::size_t count = 0;
    bool normalized = false;
    MapSet set;
    try {
        const json j = json::parse(slurp(index_path));
        if (j.at("format_version").get<int>() != maps_format_version) {
            throw Error(ErrorKind::Parse, index_path.string() + ": unsupported format_version");
        }
        count = j.at("pixel_count").get<std::size_t>();
        grid.cols = j.at("grid").at("cols").get<std::size_t>();
        grid.rows = j.at("grid").at("rows").get<std::size_t>();
        normalized = j.at("normalized").get<bool>();
        set.rel_threshold = j.value("rel_threshold", default_rel_threshold);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, index_path.string() + ": " + e.what());
    }

    set.detections = read_detections_csv(dir / "detections.csv");
    std::vector<const PatchDetection*> by_index(grid.size(), nullptr);
    for (const auto& d : set.detections) {
        if (d.scan_index >= grid.size()) {
            throw Error(ErrorKind::Range, "detections.csv lists scan index " + std::to_string(d.scan_index));
        }
        by_index[d.scan_index] = &d;
    }

    for (std::size_t p = 0; p < count; ++p) {
        ResponseMap m;
        m.pixel = p;
        m.grid = grid;
        m.normalized = normalized;
        m.values = read_grid_csv(dir / pixel_file(p, "values"), grid);
        m.valid = read_mask_csv(dir / pixel_file(p, "valid"), grid);
        m.anchors.assign(grid.size(), std::nullopt);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const auto cell = snake_index_to_cell(k, grid);
            const auto off = m.cell_offset(cell);
            if (!m.valid[off]) continue;
            if (!by_index[k] || !by_index[k]->valid) {
                throw Error(ErrorKind::Consistency, "pixel " + std::to_string(p) + " cell for scan index " +
                                                        std::to_string(k) + " is valid but has no valid detection");
            }
            m.anchors[off] = by_index[k]->center;
        }
        set.masks.push_back({p, grid, read_mask_csv(dir / pixel_file(p, "support"), grid)});
        set.maps.push_back(std::move(m));
    }
    return set;
}

void write_report_text(const ConsistencyReport& report, const fs::path& path) {
    std::ostringstream out;
    out << "format_version = 1\n";
    out << "rel_threshold = " << format_real(report.rel_threshold) << "\n";
    out << "pixel_count = " << report.pixels.size() << "\n";
    out << "invalid_cells_a = " << report.invalid_cells_a << "\n";
    out << "invalid_cells_b = " << report.invalid_cells_b << "\n";
    for (const auto& e : report.pixels) {
        out << "\n[pixel " << e.pixel << "]\n";
        out << "iou = " << optional_real(e.iou) << "\n";
        out << "centroid_displacement_px = " << optional_real(e.centroid_displacement) << "\n";
        out << "cosine = " << optional_real(e.cosine) << "\n";
    }
    const auto block = [&](const char* name, const MetricSummary& s) {
        out << name << "_mean = " << format_real(s.mean) << "\n";
        out << name << "_std = " << format_real(s.stddev) << "\n";
        out << name << "_defined = " << s.defined << "\n";
        out << name << "_undefined = " << s.undefined << "\n";
    };
    out << "\n[aggregate]\n";
    block("iou", report.iou);
    block("centroid_displacement_px", report.centroid_displacement);
    block("cosine", report.cosine);
    write_text_file(path, out.str());
}

void write_report_csv(const ConsistencyReport& report, const fs::path& path) {
    std::string out = "pixel,iou,centroid_displacement_px,cosine\n";
    for (const auto& e : report.pixels) {
        out += std::to_string(e.pixel) + ',' + optional_real(e.iou) + ',' + optional_real(e.centroid_displacement) +
               ',' + optional_real(e.cosine) + '\n';
    }
    out += "mean," + format_real(report.iou.mean) + ',' + format_real(report.centroid_displacement.mean) + ',' +
           format_real(report.cosine.mean) + '\n';
    out += "std," + format_real(report.iou.stddev) + ',' + format_real(report.centroid_displacement.stddev) + ',' +
           format_real(report.cosine.stddev) + '\n';
    write_text_file(path, out);
}

void write_ground_truth_grids(const fs::path& dir, const GridSpec& grid,
                              const std::vector<std::vector<double>>& disk_weight,
                              const std::vector<std::vector<double>>& point_weight) {
    ensure_directory(dir);
    for (std::size_t p = 0; p < disk_weight.size(); ++p) {
        write_grid_csv(dir / pixel_file(p, "disk"), grid, disk_weight[p]);
        write_grid_csv(dir / pixel_file(p, "point"), grid, point_weight[p]);
    }
}

std::vector<double> read_ground_truth_disk(const fs::path& dir, const GridSpec& grid, std::size_t pixel) {
    return read_grid_csv(dir / pixel_file(pixel, "disk"), grid);
}

}  // namespace diffcal
