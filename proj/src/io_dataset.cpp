#include "diffcal/error.hpp"
#include "diffcal/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace diffcal {

using nlohmann::json;

namespace {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string index_name(std::size_t k) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%06zu", k);
    return buf;
}

}  // namespace

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create directory " + dir.string());
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string format_real(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_real(std::string_view text, const std::string& context) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorKind::Parse, context + ": '" + std::string(text) + "' is not a number");
    }
    return value;
}

std::vector<ScanEntry> standard_scan_entries(std::size_t count, bool background) {
    std::vector<ScanEntry> out;
    out.reserve(count);
    const fs::path frames = background ? "bg_frames" : "frames";
    const fs::path hist = background ? "bg_hist" : "hist";
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back({k, frames / (index_name(k) + ".png"), hist / (index_name(k) + ".csv")});
    }
    return out;
}

namespace {

json entries_to_json(const std::vector<ScanEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries) {
        arr.push_back({{"index", e.index}, {"frame", e.frame.generic_string()}, {"hist", e.hist.generic_string()}});
    }
    return arr;
}

std::vector<ScanEntry> entries_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw Error(ErrorKind::Parse, "manifest field '" + what + "' must be an array");
    std::vector<ScanEntry> out;
    for (const auto& e : arr) {
        out.push_back({e.at("index").get<std::size_t>(), fs::path(e.at("frame").get<std::string>()),
                       fs::path(e.at("hist").get<std::string>())});
    }
    return out;
}

// Every index 0..K-1 exactly once.
void check_entries(const std::vector<ScanEntry>& entries, std::size_t K, const std::string& what) {
    std::vector<int> seen(K, 0);
    for (const auto& e : entries) {
        if (e.index >= K) {
            throw Error(ErrorKind::Range, what + " lists scan index " + std::to_string(e.index) + " outside grid of " +
                                              std::to_string(K));
        }
        if (seen[e.index]++) {
            throw Error(ErrorKind::DuplicateIndex, what + " lists scan index " + std::to_string(e.index) + " twice");
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (!seen[k]) throw Error(ErrorKind::IncompleteDataset, what + " is missing scan index " + std::to_string(k));
    }
}

}  // namespace

void write_manifest(const DatasetManifest& m, const fs::path& path) {
    json j;
    j["format_version"] = m.format_version;
    j["sensor"] = {{"pixel_count", m.sensor.pixel_count},
                   {"bin_count", m.sensor.bin_count},
                   {"layout", std::string(to_string(m.sensor.layout))},
                   {"ranging_mode", std::string(to_string(m.sensor.ranging_mode))},
                   {"max_count", m.sensor.max_count}};
    j["grid"] = {{"cols", m.grid.cols}, {"rows", m.grid.rows}, {"order", std::string(to_string(m.grid.order))}};
    j["frame"] = {{"width", m.frame.width}, {"height", m.frame.height}};
    j["window"] = m.window ? json{{"lo", m.window->lo}, {"hi", m.window->hi}} : json(nullptr);
    j["scans"] = entries_to_json(m.scans);
    j["background"] = entries_to_json(m.background);
    j["provenance"] = {{"description", m.provenance},
                       {"ground_truth", m.ground_truth ? json(m.ground_truth->generic_string()) : json(nullptr)}};
    write_text_file(path, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& path) {
    const std::string text = read_text_file(path);
    DatasetManifest m;
    try {
        const json j = json::parse(text);
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != manifest_format_version) {
            throw Error(ErrorKind::Parse, path.string() + ": unsupported format_version " +
                                              std::to_string(m.format_version));
        }
        const auto& s = j.at("sensor");
        m.sensor.pixel_count = s.at("pixel_count").get<std::size_t>();
        m.sensor.bin_count = s.at("bin_count").get<std::size_t>();
        m.sensor.layout = parse_layout(s.at("layout").get<std::string>());
        m.sensor.ranging_mode = parse_ranging_mode(s.at("ranging_mode").get<std::string>());
        m.sensor.max_count = s.at("max_count").get<std::uint32_t>();
        const auto& g = j.at("grid");
        m.grid.cols = g.at("cols").get<std::size_t>();
        m.grid.rows = g.at("rows").get<std::size_t>();
        m.grid.order = parse_scan_order(g.value("order", std::string("snake_row_major")));
        const auto& f = j.at("frame");
        m.frame.width = f.at("width").get<std::size_t>();
        m.frame.height = f.at("height").get<std::size_t>();
        if (j.contains("window") && !j.at("window").is_null()) {
            m.window = BinWindow{j["window"].at("lo").get<std::size_t>(), j["window"].at("hi").get<std::size_t>()};
        }
        m.scans = entries_from_json(j.at("scans"), "scans");
        m.background = entries_from_json(j.at("background"), "background");
        if (j.contains("provenance")) {
            const auto& p = j["provenance"];
            m.provenance = p.value("description", std::string());
            if (p.contains("ground_truth") && !p["ground_truth"].is_null()) {
                m.ground_truth = fs::path(p["ground_truth"].get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
        throw;
    }
    try {
        m.sensor.validate();
        m.grid.validate();
        m.frame.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    if (m.window) m.window->validate(m.sensor.bin_count);
    check_entries(m.scans, m.grid.size(), "scans");
    check_entries(m.background, m.grid.size(), "background");
    return m;
}

HistogramCube read_histogram_csv(const fs::path& path, const SensorConfig& sensor, std::size_t scan_index,
                                 CubeKind kind) {
    const std::string text = read_text_file(path);
    const std::string where = path.string() + " (scan index " + std::to_string(scan_index) + ")";
    HistogramCube cube(sensor.pixel_count, sensor.bin_count, scan_index, kind);

    std::size_t row = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (row >= sensor.pixel_count) {
            throw Error(ErrorKind::Shape, where + ": more than " + std::to_string(sensor.pixel_count) + " rows");
        }
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (true) {
            long long v = 0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc() || (res.ptr != end && *res.ptr != ',')) {
                throw Error(ErrorKind::Parse, where + ": row " + std::to_string(row) + " column " +
                                                  std::to_string(col) + " is not an integer");
            }
            if (col >= sensor.bin_count) {
                throw Error(ErrorKind::Shape, where + ": row " + std::to_string(row) + " has more than " +
                                                  std::to_string(sensor.bin_count) + " columns");
            }
            if (v < 0) {
                throw Error(ErrorKind::NegativeCount, where + ": row " + std::to_string(row) + " column " +
                                                          std::to_string(col) + " is " + std::to_string(v));
            }
            if (v > static_cast<long long>(sensor.max_count)) {
                throw Error(ErrorKind::CountOverflow, where + ": row " + std::to_string(row) + " column " +
                                                          std::to_string(col) + " is " + std::to_string(v) +
                                                          " > max_count " + std::to_string(sensor.max_count));
            }
            cube.at(row, col++) = static_cast<std::uint32_t>(v);
            if (res.ptr == end) break;
            p = res.ptr + 1;
        }
        if (col != sensor.bin_count) {
            throw Error(ErrorKind::Shape, where + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                                              " columns, expected " + std::to_string(sensor.bin_count));
        }
        ++row;
    }
    if (row != sensor.pixel_count) {
        throw Error(ErrorKind::Shape, where + ": " + std::to_string(row) + " rows, expected " +
                                          std::to_string(sensor.pixel_count));
    }
    return cube;
}

void write_histogram_csv(const HistogramCube& cube, const fs::path& path) {
    std::string out;
    out.reserve(cube.counts.size() * 4);
    char buf[16];
    for (std::size_t p = 0; p < cube.pixel_count; ++p) {
        for (std::size_t t = 0; t < cube.bin_count; ++t) {
            if (t) out += ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, cube.at(p, t));
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

Dataset load_dataset(const fs::path& manifest_or_dir, unsigned threads) {
    std::error_code ec;
    const fs::path manifest_path =
        fs::is_directory(manifest_or_dir, ec) ? manifest_or_dir / "manifest.json" : manifest_or_dir;
    Dataset ds;
    ds.root = manifest_path.parent_path();
    ds.manifest = read_manifest(manifest_path);
    const auto& m = ds.manifest;
    const std::size_t K = m.grid.size();

    // Existence first so the diagnostic names the first missing path.
    for (const auto* list : {&m.scans, &m.background}) {
        for (const auto& e : *list) {
            for (const auto& rel : {e.frame, e.hist}) {
                if (!fs::is_regular_file(ds.root / rel, ec)) {
                    throw Error(ErrorKind::MissingFile, (ds.root / rel).string() + " (scan index " +
                                                            std::to_string(e.index) + ")");
                }
            }
        }
    }

    ds.patch.resize(K);
    ds.background.resize(K);
    std::vector<const ScanEntry*> scan_by_index(K), bg_by_index(K);
    for (const auto& e : m.scans) scan_by_index[e.index] = &e;
    for (const auto& e : m.background) bg_by_index[e.index] = &e;

    const auto check_frame = [&](const ScanEntry& e) {
        const auto path = ds.root / e.frame;
        const auto [w, h] = png_dimensions(path);
        if (w != m.frame.width || h != m.frame.height) {
            throw Error(ErrorKind::Shape, path.string() + " (scan index " + std::to_string(e.index) + ") is " +
                                              std::to_string(w) + "x" + std::to_string(h) + ", manifest declares " +
                                              std::to_string(m.frame.width) + "x" + std::to_string(m.frame.height));
        }
    };

    // Workers fill disjoint slots; the first failure in index order wins so
    // diagnostics do not depend on scheduling.
    std::vector<std::optional<Error>> failures(K);
    parallel_for(K, threads, [&](std::size_t k) {
        try {
            ds.patch[k] = read_histogram_csv(ds.root / scan_by_index[k]->hist, m.sensor, k, CubeKind::PatchPresent);
            ds.background[k] = read_histogram_csv(ds.root / bg_by_index[k]->hist, m.sensor, k, CubeKind::Background);
            check_frame(*scan_by_index[k]);
            check_frame(*bg_by_index[k]);
        } catch (const Error& e) {
            failures[k] = e;
        }
    });
    for (const auto& f : failures) {
        if (f) throw *f;
    }

    if (m.ground_truth && !fs::is_directory(ds.root / *m.ground_truth, ec)) {
        ds.warnings.push_back("ground-truth directory " + (ds.root / *m.ground_truth).string() + " not found");
    }
    return ds;
}

RgbImage Dataset::load_frame(std::size_t k) const {
    for (const auto& e : manifest.scans) {
        if (e.index == k) return read_png(root / e.frame);
    }
    throw Error(ErrorKind::Range, "no frame for scan index " + std::to_string(k));
}

RgbImage Dataset::load_background_frame(std::size_t k) const {
    for (const auto& e : manifest.background) {
        if (e.index == k) return read_png(root / e.frame);
    }
    throw Error(ErrorKind::Range, "no background frame for scan index " + std::to_string(k));
}

}  // namespace diffcal
