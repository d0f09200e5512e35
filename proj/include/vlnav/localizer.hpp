#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlnav/feature_space.hpp"
#include "vlnav/geometry.hpp"
#include "vlnav/instruction_parser.hpp"
#include "vlnav/vl_map.hpp"

namespace vlnav {

struct LocalizerConfig {
    double dbscan_eps{3.0};  // cells
    int dbscan_min_pts{4};
    double offset_delta{0.5};       // m, left/right/front displacement
    double snap_radius{0.3};        // m, free-cell search around the offset
    double default_move_dist{0.5};  // m, move_forward without a distance
    double default_turn_deg{90.0};  // turns without an angle
    std::vector<std::string> default_labels{"floor", "wall"};
};

// Grounded goal: absolute map cell plus the egocentric polar form the
// controller consumes. heading_target is set for turns and `face`.
struct Waypoint {
    Cell cell;
    Vec2 world;
    double rho{0.0};  // meters from the grounding pose
    double phi{0.0};  // egocentric bearing, (-pi, pi]
    std::optional<double> heading_target;
    bool fallback_behind{false};  // no cluster was in front
};

struct Cluster {
    std::vector<Cell> members;
    Cell center;  // rounded arithmetic mean of members
};

// Per-cell argmax labels over [target, defaults..., other]; -1 where the map
// is unobserved, otherwise a column index (0 = target). score holds the
// winning similarity.
struct LabelGrid {
    int rows{0};
    int cols{0};
    std::vector<std::int16_t> label;
    std::vector<float> score;

    std::int16_t label_at(Cell c) const { return label[std::size_t(c.u) * cols + c.v]; }
    float score_at(Cell c) const { return score[std::size_t(c.u) * cols + c.v]; }
};

struct LandmarkNotFound : std::runtime_error {
    explicit LandmarkNotFound(const std::string& landmark)
        : std::runtime_error("landmark \"" + landmark + "\" not found on map"),
          name(landmark) {}
    std::string name;
};

struct NoFreeCellNearOffset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Waypoint for movement-only macros from the grounding pose alone.
// move_forward advances D (or the default) along the heading; turns keep the
// position and set heading_target (left decreases theta).
Waypoint ground_pure_motion(const MacroAction& macro, const Pose& pose,
                            const LocalizerConfig& cfg = {});

// Scores every observed cell against the text matrix for
// [target, defaults..., "other"]; ties go to the lowest column, so the
// target wins them.
LabelGrid label_map(const VLMap& map, const std::string& target_label,
                    const std::vector<std::string>& defaults,
                    const TextEncoder& encoder);

// Classic density-based clustering on cell coordinates (Euclidean metric).
// Noise cells join no cluster; output is sorted by center row-major.
std::vector<Cluster> dbscan(std::span<const Cell> cells, double eps,
                            int min_pts);

// Clusters the target-labeled cells and picks the nearest cluster whose
// center lies within +-pi/2 of the heading; falls back to the globally
// nearest one (flagged) when nothing is in front. Throws LandmarkNotFound.
struct LocalizeResult {
    Cluster cluster;
    bool fallback_behind{false};
};
LocalizeResult localize_landmark(const VLMap& map, const std::string& landmark,
                                 const Pose& pose, const LocalizerConfig& cfg,
                                 const TextEncoder& encoder);

// Dispatches a macro-action to its waypoint. `anchor` is the pose the
// egocentric offsets are defined in (the pose when the macro became active);
// it defaults to `pose`. The polar form is always relative to `pose`.
Waypoint propose_waypoint(const MacroAction& macro, const VLMap& map,
                          const Pose& pose, const LocalizerConfig& cfg,
                          const TextEncoder& encoder,
                          std::optional<Pose> anchor = std::nullopt);

}  // namespace vlnav
