#include "vlnav/controller.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "vlnav/errors.hpp"

namespace vlnav {
namespace {

// Blocked mask = occupied cells dilated by a Euclidean disc of
// inflation_cells.
std::vector<std::uint8_t> inflate(const OccGrid& occ, int inflation) {
    std::vector<std::uint8_t> mask(occ.cells.size(), 0);
    const int r2 = inflation * inflation;
    for (int u = 0; u < occ.rows; ++u) {
        for (int v = 0; v < occ.cols; ++v) {
            if (occ.at({u, v}) != Occupancy::kOccupied) continue;
            for (int du = -inflation; du <= inflation; ++du) {
                for (int dv = -inflation; dv <= inflation; ++dv) {
                    if (du * du + dv * dv > r2) continue;
                    const int nu = u + du, nv = v + dv;
                    if (nu < 0 || nu >= occ.rows || nv < 0 || nv >= occ.cols) continue;
                    mask[std::size_t(nu) * occ.cols + nv] = 1;
                }
            }
        }
    }
    return mask;
}

struct OpenNode {
    double f;
    double h;
    int idx;
    bool operator>(const OpenNode& o) const {
        if (f != o.f) return f > o.f;
        if (h != o.h) return h > o.h;
        return idx > o.idx;
    }
};

PathResult run_astar(Cell start, Cell goal, const OccGrid& occ,
                     const std::vector<std::uint8_t>& blocked_mask,
                     double unknown_cost_factor) {
    const int rows = occ.rows, cols = occ.cols;
    auto idx_of = [cols](Cell c) { return c.u * cols + c.v; };
    const int goal_idx = idx_of(goal);
    const int start_idx = idx_of(start);

    std::vector<double> g(std::size_t(rows) * cols,
                          std::numeric_limits<double>::infinity());
    std::vector<int> parent(std::size_t(rows) * cols, -1);
    std::vector<std::uint8_t> closed(std::size_t(rows) * cols, 0);

    auto heuristic = [&](int idx) {
        const double du = idx / cols - goal.u;
        const double dv = idx % cols - goal.v;
        return std::hypot(du, dv);
    };

    std::priority_queue<OpenNode, std::vector<OpenNode>, std::greater<OpenNode>>
        open;
    g[start_idx] = 0.0;
    open.push({heuristic(start_idx), heuristic(start_idx), start_idx});

    static constexpr int kDu[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int kDv[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

    while (!open.empty()) {
        const OpenNode top = open.top();
        open.pop();
        if (closed[top.idx]) continue;
        closed[top.idx] = 1;
        if (top.idx == goal_idx) break;

        const int cu = top.idx / cols, cv = top.idx % cols;
        for (int k = 0; k < 8; ++k) {
            const int nu = cu + kDu[k], nv = cv + kDv[k];
            if (nu < 0 || nu >= rows || nv < 0 || nv >= cols) continue;
            const int nidx = nu * cols + nv;
            if (closed[nidx] || blocked_mask[nidx]) continue;
            const bool diag = kDu[k] != 0 && kDv[k] != 0;
            double step = diag ? std::numbers::sqrt2 : 1.0;
            if (occ.at({nu, nv}) == Occupancy::kUnknown) {
                step *= unknown_cost_factor;
            }
            const double ng = g[top.idx] + step;
            if (ng < g[nidx]) {
                g[nidx] = ng;
                parent[nidx] = top.idx;
                open.push({ng + heuristic(nidx), heuristic(nidx), nidx});
            }
        }
    }

    if (!closed[goal_idx]) {
        throw NoPath("no path from (" + std::to_string(start.u) + "," +
                     std::to_string(start.v) + ") to (" + std::to_string(goal.u) +
                     "," + std::to_string(goal.v) + ")");
    }

    PathResult result;
    for (int at = goal_idx; at != -1; at = parent[at]) {
        result.cells.push_back({at / cols, at % cols});
    }
    std::reverse(result.cells.begin(), result.cells.end());

    // Canonical cost from step counts: exactly reproducible for any path of
    // equal real cost, independent of summation order.
    double straight = 0.0, diagonal = 0.0;
    for (std::size_t k = 1; k < result.cells.size(); ++k) {
        const Cell& a = result.cells[k - 1];
        const Cell& b = result.cells[k];
        const bool diag = a.u != b.u && a.v != b.v;
        const double w =
            occ.at(b) == Occupancy::kUnknown ? unknown_cost_factor : 1.0;
        (diag ? diagonal : straight) += w;
    }
    result.cost = straight + diagonal * std::numbers::sqrt2;
    return result;
}

}  // namespace

PathResult plan_path(Cell start, Cell goal, const OccGrid& occ,
                     int inflation_cells, double unknown_cost_factor) {
    if (!occ.in_bounds(start) || !occ.in_bounds(goal)) {
        throw NoPath("start or goal outside the grid");
    }
    std::vector<std::uint8_t> blocked_mask = inflate(occ, inflation_cells);
    blocked_mask[std::size_t(start.u) * occ.cols + start.v] = 0;
    if (blocked_mask[std::size_t(goal.u) * occ.cols + goal.v]) {
        throw NoPath("goal cell is blocked");
    }
    return run_astar(start, goal, occ, blocked_mask, unknown_cost_factor);
}

bool PointGoalController::blocked(const std::vector<std::uint8_t>& mask,
                                  const GridFrame& frame, Cell c) const {
    return mask[std::size_t(c.u) * frame.cols + c.v] != 0;
}

Action PointGoalController::turn_towards(double bearing_err) const {
    return bearing_err > 0.0 ? Action::kTurnRight : Action::kTurnLeft;
}

void PointGoalController::notify_collision(bool collided) {
    if (collided && cfg_.replan_on_collision) need_replan_ = true;
}

void PointGoalController::reset() {
    path_.clear();
    cursor_ = 0;
    planned_goal_.reset();
    planned_revision_ = 0;
    need_replan_ = true;
}

Action PointGoalController::next_action(const Pose& pose, const Waypoint& wp,
                                        const VLMap& map) {
    const Vec2 delta = wp.world - pose.position();
    const double rho = delta.norm();

    // Reached: a forward step cannot improve on less than half its length,
    // so the effective stop radius never drops below that quantum.
    const double stop_radius = std::max(cfg_.success_radius, cfg_.forward_step / 2.0);
    if (rho <= stop_radius) {
        if (wp.heading_target) {
            const double err = wrap_angle(*wp.heading_target - pose.theta);
            if (std::abs(err) > cfg_.align_tolerance) return turn_towards(err);
        }
        return Action::kStop;
    }

    const GridFrame& frame = map.frame();
    const Cell agent = agent_cell(pose, map);
    const std::vector<std::uint8_t> mask =
        inflate(map.occupancy(), cfg_.inflation_cells);

    if (planned_goal_ && !(*planned_goal_ == wp.cell)) need_replan_ = true;
    if (!need_replan_ && planned_revision_ != map.revision()) {
        // Replan only when the stored path ran into newly blocked cells.
        for (std::size_t k = cursor_; k < path_.size(); ++k) {
            if (blocked(mask, frame, path_[k])) {
                need_replan_ = true;
                break;
            }
        }
        planned_revision_ = map.revision();
    }
    if (!need_replan_ && path_.empty()) need_replan_ = true;
    if (!need_replan_) {
        // Track the path cell nearest the agent (forward only); a large gap
        // means the agent drifted off this plan.
        std::size_t best = cursor_;
        double best_d =
            (frame.cell_center(path_[cursor_]) - pose.position()).norm();
        for (std::size_t k = cursor_ + 1; k < path_.size(); ++k) {
            const double d =
                (frame.cell_center(path_[k]) - pose.position()).norm();
            if (d <= best_d) {
                best_d = d;
                best = k;
            }
        }
        cursor_ = best;
        if (best_d > cfg_.lookahead_cells * frame.resolution) {
            need_replan_ = true;
        }
    }

    if (need_replan_) {
        // The waypoint may sit next to (or on) an obstacle; plan to the
        // nearest unblocked cell within a bounded ring around it.
        std::vector<std::uint8_t> plan_mask = mask;
        plan_mask[std::size_t(agent.u) * frame.cols + agent.v] = 0;
        Cell target = wp.cell;
        if (plan_mask[std::size_t(target.u) * frame.cols + target.v]) {
            const int max_ring =
                cfg_.inflation_cells +
                static_cast<int>(std::ceil(1.0 / frame.resolution));
            std::optional<Cell> found;
            double best_d2 = 0.0;
            for (int r = 1; r <= max_ring && !found; ++r) {
                for (int du = -r; du <= r; ++du) {
                    for (int dv = -r; dv <= r; ++dv) {
                        if (std::max(std::abs(du), std::abs(dv)) != r) continue;
                        const Cell c{wp.cell.u + du, wp.cell.v + dv};
                        if (!map.occupancy().in_bounds(c)) continue;
                        if (plan_mask[std::size_t(c.u) * frame.cols + c.v]) continue;
                        const double d2 = double(du) * du + double(dv) * dv;
                        if (!found || d2 < best_d2) {
                            found = c;
                            best_d2 = d2;
                        }
                    }
                }
            }
            if (!found) {
                throw NoPath("no approachable cell near the waypoint");
            }
            target = *found;
        }
        PathResult plan = run_astar(agent, target, map.occupancy(), plan_mask,
                                    cfg_.unknown_cost_factor);
        path_ = std::move(plan.cells);
        cursor_ = 0;
        planned_goal_ = wp.cell;
        planned_revision_ = map.revision();
        need_replan_ = false;
    }

    // Carrot: the furthest path cell within the lookahead window.
    std::size_t target_idx = cursor_;
    const double lookahead = cfg_.lookahead_cells * frame.resolution;
    while (target_idx + 1 < path_.size()) {
        const Vec2 c = frame.cell_center(path_[target_idx + 1]);
        if ((c - pose.position()).norm() <= lookahead) {
            ++target_idx;
        } else {
            break;
        }
    }
    Vec2 carrot = frame.cell_center(path_[std::min(target_idx, path_.size() - 1)]);
    if (target_idx + 1 >= path_.size()) carrot = wp.world;

    const Vec2 to_carrot = carrot - pose.position();
    if (to_carrot.norm() < 1e-9) return Action::kMoveForward;
    const double bearing_err =
        wrap_angle(std::atan2(to_carrot.y, to_carrot.x) - pose.theta);
    if (std::abs(bearing_err) > cfg_.align_tolerance) {
        return turn_towards(bearing_err);
    }
    return Action::kMoveForward;
}

}  // namespace vlnav
