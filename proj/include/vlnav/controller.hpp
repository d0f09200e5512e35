#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "vlnav/geometry.hpp"
#include "vlnav/localizer.hpp"
#include "vlnav/simulator.hpp"
#include "vlnav/vl_map.hpp"

namespace vlnav {

struct ControllerConfig {
    double success_radius{0.2};
    double turn_step{deg2rad(15.0)};
    double align_tolerance{deg2rad(10.0)};  // must stay >= turn_step / 2
    int timeout_steps{200};
    bool replan_on_collision{true};
    int inflation_cells{4};   // agent radius at 5 cm resolution
    int lookahead_cells{6};   // path carrot distance
    double forward_step{0.25};
    double unknown_cost_factor{1.5};
};

struct NoPath : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PathResult {
    std::vector<Cell> cells;  // start .. goal inclusive
    double cost{0.0};         // canonical: straight + sqrt(2) * diagonal,
                              // unknown cells weighted by the cost factor
};

// 8-connected A* with a Euclidean heuristic over occupancy inflated by the
// agent radius. Unknown cells are traversable at unknown_cost_factor x cost;
// ties break by (f, h, row-major). The start cell is always traversable.
// Throws NoPath when the goal is unreachable.
PathResult plan_path(Cell start, Cell goal, const OccGrid& occ,
                     int inflation_cells, double unknown_cost_factor = 1.5);

// Deterministic point-goal policy replacing a learned local controller:
// stop once the waypoint is reached (and aligned, when it asks for a
// heading); otherwise follow a cached A* path, replanning after collisions,
// waypoint changes, or a newly blocked path.
class PointGoalController {
public:
    explicit PointGoalController(const ControllerConfig& cfg = {}) : cfg_(cfg) {}

    const ControllerConfig& config() const { return cfg_; }

    Action next_action(const Pose& pose, const Waypoint& wp, const VLMap& map);

    // Feed back the simulator's collision flag for the last move_forward.
    void notify_collision(bool collided);

    void reset();

private:
    bool blocked(const std::vector<std::uint8_t>& mask, const GridFrame& frame,
                 Cell c) const;
    Action turn_towards(double bearing_err) const;

    ControllerConfig cfg_;
    std::vector<Cell> path_;
    std::size_t cursor_{0};
    std::optional<Cell> planned_goal_;
    std::uint64_t planned_revision_{0};
    bool need_replan_{true};
};

}  // namespace vlnav
