#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vlnav/camera.hpp"
#include "vlnav/controller.hpp"
#include "vlnav/localizer.hpp"
#include "vlnav/simulator.hpp"
#include "vlnav/vl_map.hpp"

namespace vlnav {

// Every tunable default in one place. A TOML-style key/value file (flat keys
// or [section] headers) can override any of them; the CLI also honors the
// VLNAV_CONFIG environment variable.
struct RunConfig {
    MotionConfig motion;
    CameraConfig camera;
    MapConfig map;
    LocalizerConfig localizer;
    ControllerConfig controller;

    int feature_dim{16};
    std::uint64_t codebook_seed{7};
    double noise_sigma{0.0};
    double depth_dropout{0.0};

    double goal_radius{0.5};
    double jitter_pos{0.25};     // batch start jitter, +-m per axis
    double jitter_deg{30.0};     // batch heading jitter, +-deg
    int scan_steps{24};          // in-place turns for grounding recovery
};

// Applies `key = value` overrides onto defaults. Unknown keys raise
// ValidationError so typos never pass silently.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_text(const std::string& text,
                               const std::string& origin);
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value, const std::string& ctx);

// Reads $VLNAV_CONFIG when set, else returns defaults.
RunConfig run_config_from_env();

}  // namespace vlnav
