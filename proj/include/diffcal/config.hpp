#pragma once

#include "diffcal/calibrate.hpp"
#include "diffcal/core.hpp"
#include "diffcal/io.hpp"
#include "diffcal/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace diffcal {

using Json = nlohmann::json;

/// Parses a JSON file; syntax errors are Config errors naming the path.
Json read_json_file(const std::filesystem::path& path);

// Every apply_json overlays the keys present in `j` onto `out`, leaving
// other fields untouched. Unknown keys and wrongly typed values are Config
// errors naming the key path.

Json to_json(const SensorConfig& v);
void apply_json(const Json& j, SensorConfig& out, const std::string& ctx = "sensor");
Json to_json(const GridSpec& v);
void apply_json(const Json& j, GridSpec& out, const std::string& ctx = "grid");
Json to_json(const RgbFrameSpec& v);
void apply_json(const Json& j, RgbFrameSpec& out, const std::string& ctx = "frame");
Json to_json(const HoughParams& v);
void apply_json(const Json& j, HoughParams& out, const std::string& ctx = "hough");
Json to_json(const SceneSpec& v);
void apply_json(const Json& j, SceneSpec& out, const std::string& ctx = "scene");
Json to_json(const PixelKernel& v);
PixelKernel kernel_from_json(const Json& j, const std::string& ctx);

/// Parameters of `diffcal simulate`. Without explicit kernels the default
/// bank for the sensor layout is used.
struct SimulateConfig {
    SimConfig sim;
    SceneSpec scene;
    std::optional<std::vector<PixelKernel>> kernels;

    KernelBank kernel_bank() const;
};

Json to_json(const SimulateConfig& v);
void apply_json(const Json& j, SimulateConfig& out);

struct CalibrateConfig {
    CalibrationParams params;
    Colormap colormap = Colormap::Viridis;
};

Json to_json(const CalibrateConfig& v);
void apply_json(const Json& j, CalibrateConfig& out);

struct CompareConfig {
    double rel_threshold = default_rel_threshold;
};

Json to_json(const CompareConfig& v);
void apply_json(const Json& j, CompareConfig& out);

struct RenderConfig {
    Colormap colormap = Colormap::Viridis;
    double splat_radius = 0.0;  // <= 0: half the mean anchor spacing
};

Json to_json(const RenderConfig& v);
void apply_json(const Json& j, RenderConfig& out);

}  // namespace diffcal
