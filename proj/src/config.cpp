#include "vlnav/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "vlnav/errors.hpp"

namespace vlnav {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& ctx) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError(ctx + ": expected a number, got \"" + v + "\"");
    }
}

int parse_int(const std::string& v, const std::string& ctx) {
    const double d = parse_double(v, ctx);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) {
        throw ParseError(ctx + ": expected an integer, got \"" + v + "\"");
    }
    return i;
}

bool parse_bool(const std::string& v, const std::string& ctx) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ParseError(ctx + ": expected a boolean, got \"" + v + "\"");
}

std::string strip_quotes(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\''))) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& raw, const std::string& ctx) {
    const std::string value = strip_quotes(raw);
    auto dbl = [&](double& field) { field = parse_double(value, ctx); };
    auto deg = [&](double& field) { field = deg2rad(parse_double(value, ctx)); };
    auto num = [&](int& field) { field = parse_int(value, ctx); };
    auto flag = [&](bool& field) { field = parse_bool(value, ctx); };

    static const std::string kUnknown = "__unknown__";
    if (key == "sim.forward_step") dbl(cfg.motion.forward_step);
    else if (key == "sim.turn_deg") deg(cfg.motion.turn_step);
    else if (key == "sim.agent_radius") dbl(cfg.motion.agent_radius);
    else if (key == "camera.width") num(cfg.camera.width);
    else if (key == "camera.height") num(cfg.camera.height);
    else if (key == "camera.fx") dbl(cfg.camera.fx);
    else if (key == "camera.fy") dbl(cfg.camera.fy);
    else if (key == "camera.cx") dbl(cfg.camera.cx);
    else if (key == "camera.cy") dbl(cfg.camera.cy);
    else if (key == "camera.depth_min") dbl(cfg.camera.depth_min);
    else if (key == "camera.depth_max") dbl(cfg.camera.depth_max);
    else if (key == "camera.mount_height") dbl(cfg.camera.mount_height);
    else if (key == "camera.pitch_deg") deg(cfg.camera.pitch);
    else if (key == "map.cells_h") num(cfg.map.cells_h);
    else if (key == "map.cells_w") num(cfg.map.cells_w);
    else if (key == "map.resolution") dbl(cfg.map.resolution);
    else if (key == "map.band_low") dbl(cfg.map.band_low);
    else if (key == "map.band_high") dbl(cfg.map.band_high);
    else if (key == "map.ray_free") flag(cfg.map.ray_free);
    else if (key == "features.dim") num(cfg.feature_dim);
    else if (key == "features.codebook_seed")
        cfg.codebook_seed = static_cast<std::uint64_t>(parse_int(value, ctx));
    else if (key == "features.noise_sigma") dbl(cfg.noise_sigma);
    else if (key == "features.depth_dropout") dbl(cfg.depth_dropout);
    else if (key == "localizer.dbscan_eps_cells") dbl(cfg.localizer.dbscan_eps);
    else if (key == "localizer.dbscan_min_pts") num(cfg.localizer.dbscan_min_pts);
    else if (key == "localizer.offset_delta") dbl(cfg.localizer.offset_delta);
    else if (key == "localizer.snap_radius") dbl(cfg.localizer.snap_radius);
    else if (key == "localizer.default_move_dist")
        dbl(cfg.localizer.default_move_dist);
    else if (key == "localizer.default_turn_deg")
        dbl(cfg.localizer.default_turn_deg);
    else if (key == "localizer.default_labels") {
        cfg.localizer.default_labels.clear();
        std::istringstream in(value);
        std::string item;
        while (std::getline(in, item, ',')) {
            const std::string t = trim(item);
            if (!t.empty()) cfg.localizer.default_labels.push_back(t);
        }
    }
    else if (key == "controller.success_radius") dbl(cfg.controller.success_radius);
    else if (key == "controller.align_tolerance_deg")
        deg(cfg.controller.align_tolerance);
    else if (key == "controller.timeout_steps") num(cfg.controller.timeout_steps);
    else if (key == "controller.replan_on_collision")
        flag(cfg.controller.replan_on_collision);
    else if (key == "controller.inflation_cells") num(cfg.controller.inflation_cells);
    else if (key == "controller.lookahead_cells") num(cfg.controller.lookahead_cells);
    else if (key == "controller.unknown_cost_factor")
        dbl(cfg.controller.unknown_cost_factor);
    else if (key == "episode.goal_radius") dbl(cfg.goal_radius);
    else if (key == "episode.jitter_pos") dbl(cfg.jitter_pos);
    else if (key == "episode.jitter_deg") dbl(cfg.jitter_deg);
    else if (key == "episode.scan_steps") num(cfg.scan_steps);
    else throw ValidationError(ctx + ": unknown config key \"" + key + "\"");

    // Keep the controller's motion constants in lockstep with the simulator.
    cfg.controller.turn_step = cfg.motion.turn_step;
    cfg.controller.forward_step = cfg.motion.forward_step;
}

namespace {

void validate(const RunConfig& cfg, const std::string& origin) {
    auto fail = [&](const std::string& what) {
        throw ValidationError(origin + ": " + what);
    };
    if (!(cfg.camera.fx > 0.0) || !(cfg.camera.fy > 0.0)) {
        fail("camera focal lengths must be positive");
    }
    if (cfg.camera.width <= 0 || cfg.camera.height <= 0) {
        fail("camera size must be positive");
    }
    if (!(cfg.camera.depth_min > 0.0) ||
        !(cfg.camera.depth_min < cfg.camera.depth_max)) {
        fail("depth range needs 0 < depth_min < depth_max");
    }
    if (!(cfg.map.resolution > 0.0) || cfg.map.cells_h <= 0 ||
        cfg.map.cells_w <= 0) {
        fail("map extent and resolution must be positive");
    }
    if (!(cfg.map.band_low < cfg.map.band_high)) {
        fail("obstacle band needs band_low < band_high");
    }
    if (!(cfg.motion.forward_step > 0.0) || !(cfg.motion.turn_step > 0.0) ||
        !(cfg.motion.agent_radius > 0.0)) {
        fail("motion step sizes and agent radius must be positive");
    }
    if (!(cfg.controller.success_radius > 0.0)) {
        fail("success_radius must be positive");
    }
    if (cfg.controller.align_tolerance < cfg.controller.turn_step / 2.0) {
        fail("align_tolerance must be at least half the turn step");
    }
    if (cfg.feature_dim < 8) fail("feature dim must be >= 8");
    if (!(cfg.goal_radius > 0.0)) fail("goal radius must be positive");
}

}  // namespace

RunConfig run_config_from_text(const std::string& text,
                               const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string ctx = origin + ":" + std::to_string(lineno);
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(ctx + ": unterminated [section]");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError(ctx + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!section.empty() && key.find('.') == std::string::npos) {
            key = section + "." + key;
        }
        apply_config_entry(cfg, key, value, ctx);
    }
    validate(cfg, origin);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return run_config_from_text(buf.str(), path);
}

RunConfig run_config_from_env() {
    const char* path = std::getenv("VLNAV_CONFIG");
    if (path == nullptr || *path == '\0') return RunConfig{};
    return load_run_config(path);
}

}  // namespace vlnav
