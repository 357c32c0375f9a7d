#include "diffcal/cli.hpp"

#include "diffcal/calibrate.hpp"
#include "diffcal/config.hpp"
#include "diffcal/error.hpp"
#include "diffcal/io.hpp"
#include "diffcal/simulator.hpp"

#include <CLI11.hpp>

#include <optional>
#include <ostream>

namespace diffcal {

namespace {

template <typename T>
void override(const std::optional<T>& flag, T& field) {
    if (flag) field = *flag;
}

Json with_paths(Json config, std::initializer_list<std::pair<const char*, std::string>> paths) {
    for (const auto& [key, value] : paths) config["paths"][key] = value;
    return config;
}

void echo_config(const fs::path& dir, const Json& config) {
    ensure_directory(dir);
    write_text_file(dir / "effective_config.json", config.dump(2) + "\n");
}

std::string plus_minus(const MetricSummary& s) {
    if (s.defined == 0) return "undefined";
    std::string text = format_real(s.mean) + " +/- " + format_real(s.stddev);
    if (s.undefined) text += " (" + std::to_string(s.undefined) + " undefined)";
    return text;
}

struct SimulateFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> noise;
    std::optional<std::string> layout;
    std::optional<std::size_t> cols, rows;
    std::optional<std::size_t> integration_step;
    std::optional<double> intensity, ambient_floor;
    std::optional<std::uint32_t> max_count;
    std::optional<unsigned> threads;
};

struct CalibrateFlags {
    std::string config;
    std::string dataset;
    std::string out;
    std::vector<std::size_t> window;
    std::optional<std::size_t> half_width;
    std::optional<double> rel_threshold, min_valid_fraction;
    std::optional<std::size_t> r_min, r_max, vote_threshold, blur_radius;
    std::optional<double> gradient_threshold, min_gradient;
    std::optional<std::string> colormap;
    std::optional<unsigned> threads;
};

struct CompareFlags {
    std::string config;
    std::string a, b, out;
    std::optional<double> rel_threshold;
};

struct RenderFlags {
    std::string config;
    std::string maps, base, out;
    std::optional<std::string> colormap;
    std::optional<double> splat_radius;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
    SimulateConfig cfg;
    if (!f.config.empty()) apply_json(read_json_file(f.config), cfg);
    if (f.layout) {
        cfg.sim.sensor.layout = parse_layout(*f.layout);
        cfg.sim.sensor.pixel_count = layout_pixel_count(cfg.sim.sensor.layout);
    }
    override(f.seed, cfg.sim.seed);
    if (f.noise) cfg.sim.noise = parse_noise_kind(*f.noise);
    override(f.cols, cfg.sim.grid.cols);
    override(f.rows, cfg.sim.grid.rows);
    override(f.integration_step, cfg.sim.integration_step);
    override(f.intensity, cfg.scene.patch.intensity);
    override(f.ambient_floor, cfg.scene.background.ambient_floor);
    override(f.max_count, cfg.sim.sensor.max_count);
    override(f.threads, cfg.sim.threads);
    cfg.sim.validate();
    cfg.scene.validate(cfg.sim.sensor);
    const KernelBank bank = cfg.kernel_bank();

    const fs::path dir = f.out;
    ensure_directory(dir);
    const auto result = simulate_scan(bank, cfg.scene, cfg.sim, dir);
    echo_config(dir, with_paths(to_json(cfg), {{"out", f.out}}));
    out << "wrote " << cfg.sim.grid.size() << " scan points to " << dir.string() << "\n";
    if (result.saturated_bins) out << "warning: " << result.saturated_bins << " bins clamped at max_count\n";
    return exit_code::ok;
}

int cmd_calibrate(const CalibrateFlags& f, std::ostream& out) {
    CalibrateConfig cfg;
    if (!f.config.empty()) apply_json(read_json_file(f.config), cfg);
    auto& p = cfg.params;
    if (!f.window.empty()) p.window = BinWindow{f.window[0], f.window[1]};
    override(f.half_width, p.half_width);
    override(f.rel_threshold, p.rel_threshold);
    override(f.min_valid_fraction, p.min_valid_fraction);
    override(f.r_min, p.hough.r_min);
    override(f.r_max, p.hough.r_max);
    override(f.vote_threshold, p.hough.vote_threshold);
    override(f.blur_radius, p.hough.blur_radius);
    override(f.gradient_threshold, p.hough.gradient_threshold);
    override(f.min_gradient, p.hough.min_gradient);
    if (f.colormap) cfg.colormap = parse_colormap(*f.colormap);
    override(f.threads, p.threads);
    p.validate();

    const Dataset dataset = load_dataset(f.dataset, p.threads);
    const CalibrationResult result = calibrate(dataset, p);
    const fs::path dir = f.out;
    write_calibration_outputs(result, dataset, p, dir, cfg.colormap);
    echo_config(dir, with_paths(to_json(cfg), {{"dataset", f.dataset}, {"out", f.out}}));

    out << "window [" << result.window.lo << ", " << result.window.hi << "] (" << to_string(result.window_source)
        << ")\n";
    out << "invalid detections: " << result.invalid_detections << " of " << result.detections.size() << "\n";
    for (std::size_t i = 0; i < result.peak_responses.size(); ++i) {
        out << "pixel " << i << " peak response " << format_real(result.peak_responses[i]) << "\n";
    }
    for (const auto& w : result.warnings) out << "warning: " << w << "\n";
    return exit_code::ok;
}

int cmd_compare(const CompareFlags& f, std::ostream& out) {
    CompareConfig cfg;
    if (!f.config.empty()) apply_json(read_json_file(f.config), cfg);
    override(f.rel_threshold, cfg.rel_threshold);

    const MapSet a = load_response_maps(f.a);
    const MapSet b = load_response_maps(f.b);
    const ConsistencyReport report = compare_modes(a.maps, b.maps, cfg.rel_threshold);
    const fs::path dir = f.out;
    ensure_directory(dir);
    write_report_text(report, dir / "report.txt");
    write_report_csv(report, dir / "report.csv");
    echo_config(dir, with_paths(to_json(cfg), {{"maps_a", f.a}, {"maps_b", f.b}, {"out", f.out}}));

    out << "iou " << plus_minus(report.iou) << "\n";
    out << "centroid_displacement_px " << plus_minus(report.centroid_displacement) << "\n";
    out << "cosine " << plus_minus(report.cosine) << "\n";
    return exit_code::ok;
}

int cmd_render(const RenderFlags& f, std::ostream& out) {
    RenderConfig cfg;
    if (!f.config.empty()) apply_json(read_json_file(f.config), cfg);
    if (f.colormap) cfg.colormap = parse_colormap(*f.colormap);
    override(f.splat_radius, cfg.splat_radius);

    const MapSet set = load_response_maps(f.maps);
    const RgbImage base = read_png(f.base);
    const fs::path dir = f.out;
    ensure_directory(dir);
    for (const auto& map : set.maps) {
        write_png(render_overlay(map, base, cfg.colormap, cfg.splat_radius),
                  dir / ("pixel_" + std::to_string(map.pixel) + ".png"));
    }
    write_png(render_composite(set.maps, base, cfg.splat_radius), dir / "composite.png");
    echo_config(dir, with_paths(to_json(cfg), {{"maps", f.maps}, {"base", f.base}, {"out", f.out}}));
    out << "wrote " << set.maps.size() << " overlays and a composite to " << dir.string() << "\n";
    return exit_code::ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatial response calibration for multi-pixel diffuse time-of-flight sensors", "diffcal"};
    app.require_subcommand(1);

    SimulateFlags sf;
    auto* sim = app.add_subcommand("simulate", "Render a synthetic scan dataset");
    sim->add_option("--config", sf.config, "JSON config file")->check(CLI::ExistingFile);
    sim->add_option("-o,--out", sf.out, "Dataset directory")->required();
    sim->add_option("--seed", sf.seed, "Noise and texture seed");
    sim->add_option("--noise", sf.noise, "none or poisson");
    sim->add_option("--layout", sf.layout, "3x3-wide, 4x4, 3x6 or 8x8");
    sim->add_option("--cols", sf.cols, "Scan grid columns");
    sim->add_option("--rows", sf.rows, "Scan grid rows");
    sim->add_option("--integration-step", sf.integration_step, "Kernel integration step in px");
    sim->add_option("--intensity", sf.intensity, "Patch return at kernel weight 1");
    sim->add_option("--ambient-floor", sf.ambient_floor, "Ambient counts per bin per unit kernel mass");
    sim->add_option("--max-count", sf.max_count, "Histogram saturation count");
    sim->add_option("--threads", sf.threads, "Worker threads (0 = all cores)");

    CalibrateFlags cf;
    auto* cal = app.add_subcommand("calibrate", "Estimate per-pixel response maps from a dataset");
    cal->add_option("--config", cf.config, "JSON config file")->check(CLI::ExistingFile);
    cal->add_option("dataset", cf.dataset, "Dataset directory or manifest.json")->required();
    cal->add_option("-o,--out", cf.out, "Output directory")->required();
    cal->add_option("--window", cf.window, "Explicit bin window LO HI")->expected(2);
    cal->add_option("--half-width", cf.half_width, "Auto window half-width in bins");
    cal->add_option("--rel-threshold", cf.rel_threshold, "Support mask threshold relative to peak");
    cal->add_option("--min-valid-fraction", cf.min_valid_fraction, "Required fraction of valid detections");
    cal->add_option("--r-min", cf.r_min, "Smallest patch radius in px");
    cal->add_option("--r-max", cf.r_max, "Largest patch radius in px");
    cal->add_option("--gradient-threshold", cf.gradient_threshold, "Edge threshold relative to max gradient");
    cal->add_option("--min-gradient", cf.min_gradient, "Absolute edge threshold");
    cal->add_option("--vote-threshold", cf.vote_threshold, "Minimum accumulator votes");
    cal->add_option("--blur-radius", cf.blur_radius, "Box blur radius before Sobel");
    cal->add_option("--colormap", cf.colormap, "viridis, hot or gray");
    cal->add_option("--threads", cf.threads, "Worker threads (0 = all cores)");

    CompareFlags pf;
    auto* cmp = app.add_subcommand("compare", "Consistency metrics between two map directories");
    cmp->add_option("--config", pf.config, "JSON config file")->check(CLI::ExistingFile);
    cmp->add_option("maps_a", pf.a, "First maps directory")->required();
    cmp->add_option("maps_b", pf.b, "Second maps directory")->required();
    cmp->add_option("-o,--out", pf.out, "Report directory")->required();
    cmp->add_option("--rel-threshold", pf.rel_threshold, "Support mask threshold relative to peak");

    RenderFlags rf;
    auto* ren = app.add_subcommand("render", "Overlay response maps on an RGB image");
    ren->add_option("--config", rf.config, "JSON config file")->check(CLI::ExistingFile);
    ren->add_option("maps", rf.maps, "Maps directory")->required();
    ren->add_option("--base", rf.base, "Base RGB image (PNG)")->required();
    ren->add_option("-o,--out", rf.out, "Output directory")->required();
    ren->add_option("--colormap", rf.colormap, "viridis, hot or gray");
    ren->add_option("--splat-radius", rf.splat_radius, "Disk radius in px (0 = automatic)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::config;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sf, out);
        if (cal->parsed()) return cmd_calibrate(cf, out);
        if (cmp->parsed()) return cmd_compare(pf, out);
        if (ren->parsed()) return cmd_render(rf, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::internal;
    }
    return exit_code::internal;
}

}  // namespace diffcal
