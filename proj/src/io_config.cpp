#include "diffcal/config.hpp"

#include "diffcal/error.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

namespace diffcal {

namespace {

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& ctx) {
    if (!j.is_object()) throw Error(ErrorKind::Config, ctx + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw Error(ErrorKind::Config, ctx + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out, const std::string& ctx) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, ctx + "." + key + ": " + e.what());
    }
}

template <typename T, typename Parse>
void read_enum(const Json& j, const char* key, T& out, const std::string& ctx, Parse parse) {
    std::string text;
    read_field(j, key, text, ctx);
    if (j.contains(key)) out = parse(text);
}

Json window_json(const std::optional<BinWindow>& w) {
    return w ? Json{{"lo", w->lo}, {"hi", w->hi}} : Json(nullptr);
}

std::optional<BinWindow> window_from_json(const Json& j, const std::string& ctx) {
    if (j.is_null()) return std::nullopt;
    check_keys(j, {"lo", "hi"}, ctx);
    if (!j.contains("lo") || !j.contains("hi")) throw Error(ErrorKind::Config, ctx + ": needs lo and hi");
    BinWindow w;
    read_field(j, "lo", w.lo, ctx);
    read_field(j, "hi", w.hi, ctx);
    return w;
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "config file " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
}

Json to_json(const SensorConfig& v) {
    return {{"pixel_count", v.pixel_count},
            {"bin_count", v.bin_count},
            {"layout", std::string(to_string(v.layout))},
            {"ranging_mode", std::string(to_string(v.ranging_mode))},
            {"max_count", v.max_count}};
}

void apply_json(const Json& j, SensorConfig& out, const std::string& ctx) {
    check_keys(j, {"pixel_count", "bin_count", "layout", "ranging_mode", "max_count"}, ctx);
    read_enum(j, "layout", out.layout, ctx, parse_layout);
    // A layout without an explicit pixel count implies its own count.
    if (j.contains("layout") && !j.contains("pixel_count")) out.pixel_count = layout_pixel_count(out.layout);
    read_field(j, "pixel_count", out.pixel_count, ctx);
    read_field(j, "bin_count", out.bin_count, ctx);
    read_enum(j, "ranging_mode", out.ranging_mode, ctx, parse_ranging_mode);
    read_field(j, "max_count", out.max_count, ctx);
}

Json to_json(const GridSpec& v) {
    return {{"cols", v.cols}, {"rows", v.rows}, {"order", std::string(to_string(v.order))}};
}

void apply_json(const Json& j, GridSpec& out, const std::string& ctx) {
    check_keys(j, {"cols", "rows", "order"}, ctx);
    read_field(j, "cols", out.cols, ctx);
    read_field(j, "rows", out.rows, ctx);
    read_enum(j, "order", out.order, ctx, parse_scan_order);
}

Json to_json(const RgbFrameSpec& v) { return {{"width", v.width}, {"height", v.height}}; }

void apply_json(const Json& j, RgbFrameSpec& out, const std::string& ctx) {
    check_keys(j, {"width", "height"}, ctx);
    read_field(j, "width", out.width, ctx);
    read_field(j, "height", out.height, ctx);
}

Json to_json(const HoughParams& v) {
    return {{"r_min", v.r_min},
            {"r_max", v.r_max},
            {"gradient_threshold", v.gradient_threshold},
            {"min_gradient", v.min_gradient},
            {"vote_threshold", v.vote_threshold},
            {"blur_radius", v.blur_radius},
            {"max_candidates", v.max_candidates}};
}

void apply_json(const Json& j, HoughParams& out, const std::string& ctx) {
    check_keys(j,
               {"r_min", "r_max", "gradient_threshold", "min_gradient", "vote_threshold", "blur_radius",
                "max_candidates"},
               ctx);
    read_field(j, "r_min", out.r_min, ctx);
    read_field(j, "r_max", out.r_max, ctx);
    read_field(j, "gradient_threshold", out.gradient_threshold, ctx);
    read_field(j, "min_gradient", out.min_gradient, ctx);
    read_field(j, "vote_threshold", out.vote_threshold, ctx);
    read_field(j, "blur_radius", out.blur_radius, ctx);
    read_field(j, "max_candidates", out.max_candidates, ctx);
}

Json to_json(const SceneSpec& v) {
    Json pulse = Json::array();
    for (const auto& tap : v.pulse) pulse.push_back({{"offset", tap.offset}, {"weight", tap.weight}});
    return {{"patch", {{"radius", v.patch.radius}, {"depth_bin", v.patch.depth_bin}, {"intensity", v.patch.intensity}}},
            {"background",
             {{"wall_bin", v.background.wall_bin},
              {"wall_intensity", v.background.wall_intensity},
              {"ambient_floor", v.background.ambient_floor}}},
            {"pulse", pulse},
            {"scan_margin", v.scan_margin},
            {"appearance",
             {{"background_level", v.appearance.background_level},
              {"texture_amplitude", v.appearance.texture_amplitude},
              {"patch_level", v.appearance.patch_level}}}};
}

void apply_json(const Json& j, SceneSpec& out, const std::string& ctx) {
    check_keys(j, {"patch", "background", "pulse", "scan_margin", "appearance"}, ctx);
    if (j.contains("patch")) {
        const auto& p = j["patch"];
        const auto c = ctx + ".patch";
        check_keys(p, {"radius", "depth_bin", "intensity"}, c);
        read_field(p, "radius", out.patch.radius, c);
        read_field(p, "depth_bin", out.patch.depth_bin, c);
        read_field(p, "intensity", out.patch.intensity, c);
    }
    if (j.contains("background")) {
        const auto& b = j["background"];
        const auto c = ctx + ".background";
        check_keys(b, {"wall_bin", "wall_intensity", "ambient_floor"}, c);
        read_field(b, "wall_bin", out.background.wall_bin, c);
        read_field(b, "wall_intensity", out.background.wall_intensity, c);
        read_field(b, "ambient_floor", out.background.ambient_floor, c);
    }
    if (j.contains("pulse")) {
        const auto& arr = j["pulse"];
        if (!arr.is_array()) throw Error(ErrorKind::Config, ctx + ".pulse: expected an array");
        out.pulse.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto c = ctx + ".pulse[" + std::to_string(i) + "]";
            check_keys(arr[i], {"offset", "weight"}, c);
            PulseTap tap;
            read_field(arr[i], "offset", tap.offset, c);
            read_field(arr[i], "weight", tap.weight, c);
            out.pulse.push_back(tap);
        }
    }
    read_field(j, "scan_margin", out.scan_margin, ctx);
    if (j.contains("appearance")) {
        const auto& a = j["appearance"];
        const auto c = ctx + ".appearance";
        check_keys(a, {"background_level", "texture_amplitude", "patch_level"}, c);
        read_field(a, "background_level", out.appearance.background_level, c);
        read_field(a, "texture_amplitude", out.appearance.texture_amplitude, c);
        read_field(a, "patch_level", out.appearance.patch_level, c);
    }
}

Json to_json(const PixelKernel& v) {
    Json arr = Json::array();
    for (const auto& g : v.components) {
        arr.push_back({{"center", {g.center.x, g.center.y}},
                       {"sigma_x", g.sigma_x},
                       {"sigma_y", g.sigma_y},
                       {"rotation", g.rotation},
                       {"amplitude", g.amplitude},
                       {"truncation", g.truncation}});
    }
    return arr;
}

PixelKernel kernel_from_json(const Json& j, const std::string& ctx) {
    if (!j.is_array()) throw Error(ErrorKind::Config, ctx + ": expected an array of Gaussian components");
    PixelKernel kernel;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto c = ctx + "[" + std::to_string(i) + "]";
        check_keys(j[i], {"center", "sigma_x", "sigma_y", "rotation", "amplitude", "truncation"}, c);
        GaussianComponent g;
        if (!j[i].contains("center")) throw Error(ErrorKind::Config, c + ": missing center");
        std::vector<double> center;
        read_field(j[i], "center", center, c);
        if (center.size() != 2) throw Error(ErrorKind::Config, c + ".center: expected [x, y]");
        g.center = {center[0], center[1]};
        read_field(j[i], "sigma_x", g.sigma_x, c);
        read_field(j[i], "sigma_y", g.sigma_y, c);
        read_field(j[i], "rotation", g.rotation, c);
        read_field(j[i], "amplitude", g.amplitude, c);
        read_field(j[i], "truncation", g.truncation, c);
        kernel.components.push_back(g);
    }
    return kernel;
}

KernelBank SimulateConfig::kernel_bank() const {
    if (!kernels) return default_kernel_bank(sim.sensor.layout, sim.frame);
    if (kernels->size() != sim.sensor.pixel_count) {
        throw Error(ErrorKind::Config, "config lists " + std::to_string(kernels->size()) + " kernels for " +
                                           std::to_string(sim.sensor.pixel_count) + " pixels");
    }
    KernelBank bank{sim.frame, *kernels};
    bank.validate();
    return bank;
}

Json to_json(const SimulateConfig& v) {
    Json kernels = nullptr;
    if (v.kernels) {
        kernels = Json::array();
        for (const auto& k : *v.kernels) kernels.push_back(to_json(k));
    }
    return {{"sensor", to_json(v.sim.sensor)},
            {"grid", to_json(v.sim.grid)},
            {"frame", to_json(v.sim.frame)},
            {"seed", v.sim.seed},
            {"integration_step", v.sim.integration_step},
            {"noise", std::string(to_string(v.sim.noise))},
            {"threads", v.sim.threads},
            {"scene", to_json(v.scene)},
            {"kernels", kernels}};
}

void apply_json(const Json& j, SimulateConfig& out) {
    const std::string ctx = "simulate";
    check_keys(j, {"sensor", "grid", "frame", "seed", "integration_step", "noise", "threads", "scene", "kernels"}, ctx);
    if (j.contains("sensor")) apply_json(j["sensor"], out.sim.sensor);
    if (j.contains("grid")) apply_json(j["grid"], out.sim.grid);
    if (j.contains("frame")) apply_json(j["frame"], out.sim.frame);
    read_field(j, "seed", out.sim.seed, ctx);
    read_field(j, "integration_step", out.sim.integration_step, ctx);
    read_enum(j, "noise", out.sim.noise, ctx, parse_noise_kind);
    read_field(j, "threads", out.sim.threads, ctx);
    if (j.contains("scene")) apply_json(j["scene"], out.scene);
    if (j.contains("kernels")) {
        const auto& k = j["kernels"];
        if (k.is_null()) {
            out.kernels.reset();
        } else {
            if (!k.is_array()) throw Error(ErrorKind::Config, "kernels: expected an array per pixel");
            std::vector<PixelKernel> list;
            for (std::size_t p = 0; p < k.size(); ++p) {
                list.push_back(kernel_from_json(k[p], "kernels[" + std::to_string(p) + "]"));
            }
            out.kernels = std::move(list);
        }
    }
}

Json to_json(const CalibrateConfig& v) {
    const auto& p = v.params;
    return {{"hough", to_json(p.hough)},
            {"window", window_json(p.window)},
            {"half_width", p.half_width},
            {"rel_threshold", p.rel_threshold},
            {"min_valid_fraction", p.min_valid_fraction},
            {"threads", p.threads},
            {"colormap", std::string(to_string(v.colormap))}};
}

void apply_json(const Json& j, CalibrateConfig& out) {
    const std::string ctx = "calibrate";
    check_keys(j, {"hough", "window", "half_width", "rel_threshold", "min_valid_fraction", "threads", "colormap"},
               ctx);
    auto& p = out.params;
    if (j.contains("hough")) apply_json(j["hough"], p.hough);
    if (j.contains("window")) p.window = window_from_json(j["window"], ctx + ".window");
    read_field(j, "half_width", p.half_width, ctx);
    read_field(j, "rel_threshold", p.rel_threshold, ctx);
    read_field(j, "min_valid_fraction", p.min_valid_fraction, ctx);
    read_field(j, "threads", p.threads, ctx);
    read_enum(j, "colormap", out.colormap, ctx, parse_colormap);
}

Json to_json(const CompareConfig& v) { return {{"rel_threshold", v.rel_threshold}}; }

void apply_json(const Json& j, CompareConfig& out) {
    check_keys(j, {"rel_threshold"}, "compare");
    read_field(j, "rel_threshold", out.rel_threshold, "compare");
}

Json to_json(const RenderConfig& v) {
    return {{"colormap", std::string(to_string(v.colormap))}, {"splat_radius", v.splat_radius}};
}

void apply_json(const Json& j, RenderConfig& out) {
    check_keys(j, {"colormap", "splat_radius"}, "render");
    read_enum(j, "colormap", out.colormap, "render", parse_colormap);
    read_field(j, "splat_radius", out.splat_radius, "render");
}

}  // namespace diffcal
