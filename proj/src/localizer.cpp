#include "vlnav/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "vlnav/errors.hpp"

namespace vlnav {
namespace {

// Rotation by -90 degrees in the y-down world frame; this is the direction
// that projects into the left half of the camera image (the view-side tests
// pin this down).
Vec2 rotate_left(Vec2 d) { return {d.y, -d.x}; }
Vec2 rotate_right(Vec2 d) { return {-d.y, d.x}; }

Waypoint finish_waypoint(Vec2 world, Cell cell, const Pose& pose,
                         std::optional<double> heading_target,
                         bool fallback_behind) {
    Waypoint wp;
    wp.world = world;
    wp.cell = cell;
    wp.heading_target = heading_target;
    wp.fallback_behind = fallback_behind;
    const Vec2 delta = world - pose.position();
    wp.rho = delta.norm();
    wp.phi = wp.rho > 0.0 ? wrap_angle(std::atan2(delta.y, delta.x) - pose.theta)
                          : 0.0;
    return wp;
}

Cell require_cell(const VLMap& map, Vec2 world, const std::string& what) {
    const auto c = map.world_to_map(world);
    if (!c) {
        throw ValidationError(what + " (" + std::to_string(world.x) + ", " +
                              std::to_string(world.y) + ") is off the map");
    }
    return *c;
}

// Nearest free cell to `target` within snap_radius; target's own cell wins
// when free. Ties break row-major.
std::optional<Vec2> snap_to_free(const VLMap& map, Vec2 target,
                                 double snap_radius) {
    const Cell c = require_cell(map, target, "offset waypoint");
    if (map.occ_at(c) == Occupancy::kFree) return target;

    const int r = static_cast<int>(std::ceil(snap_radius / map.resolution()));
    std::optional<Cell> best;
    double best_d2 = 0.0;
    for (int u = std::max(0, c.u - r); u <= std::min(map.rows() - 1, c.u + r); ++u) {
        for (int v = std::max(0, c.v - r); v <= std::min(map.cols() - 1, c.v + r); ++v) {
            if (map.occ_at({u, v}) != Occupancy::kFree) continue;
            const Vec2 center = map.cell_center_world({u, v});
            const Vec2 d = center - target;
            const double d2 = d.dot(d);
            if (d2 > snap_radius * snap_radius) continue;
            if (!best || d2 < best_d2) {
                best = Cell{u, v};
                best_d2 = d2;
            }
        }
    }
    if (!best) return std::nullopt;
    return map.cell_center_world(*best);
}

}  // namespace

Waypoint ground_pure_motion(const MacroAction& macro, const Pose& pose,
                            const LocalizerConfig& cfg) {
    switch (macro.name) {
        case MacroName::kMoveForward: {
            const double dist = macro.dist.value_or(cfg.default_move_dist);
            const Vec2 world{pose.x + dist * std::cos(pose.theta),
                             pose.y + dist * std::sin(pose.theta)};
            Waypoint wp = finish_waypoint(world, Cell{}, pose, std::nullopt, false);
            return wp;
        }
        case MacroName::kTurnLeft:
        case MacroName::kTurnRight: {
            const double angle = deg2rad(macro.angle.value_or(cfg.default_turn_deg));
            const double target = macro.name == MacroName::kTurnLeft
                                      ? pose.theta - angle
                                      : pose.theta + angle;
            return finish_waypoint(pose.position(), Cell{}, pose,
                                   wrap_angle(target), false);
        }
        default:
            throw ValidationError(std::string("not a pure-motion macro: ") +
                                  to_string(macro.name));
    }
}

LabelGrid label_map(const VLMap& map, const std::string& target_label,
                    const std::vector<std::string>& defaults,
                    const TextEncoder& encoder) {
    std::vector<std::string> labels;
    labels.push_back(target_label);
    labels.insert(labels.end(), defaults.begin(), defaults.end());
    labels.push_back("other");
    const TextEmbeddingMatrix text = encoder.encode_labels(labels);

    LabelGrid grid;
    grid.rows = map.rows();
    grid.cols = map.cols();
    grid.label.assign(std::size_t(grid.rows) * grid.cols, -1);
    grid.score.assign(std::size_t(grid.rows) * grid.cols, 0.0f);

    std::vector<double> mean(map.dim());
    for (int u = 0; u < grid.rows; ++u) {
        for (int v = 0; v < grid.cols; ++v) {
            const Cell c{u, v};
            if (!map.observed(c)) continue;
            map.feature_mean(c, mean);
            int best_col = 0;
            double best_score = -2.0;
            for (int col = 0; col < text.cols; ++col) {
                const auto tv = text.col(col);
                double s = 0.0;
                for (int d = 0; d < text.dim; ++d) s += mean[d] * tv[d];
                if (s > best_score) {  // strict: ties keep the lower column
                    best_score = s;
                    best_col = col;
                }
            }
            grid.label[std::size_t(u) * grid.cols + v] =
                static_cast<std::int16_t>(best_col);
            grid.score[std::size_t(u) * grid.cols + v] =
                static_cast<float>(best_score);
        }
    }
    return grid;
}

std::vector<Cluster> dbscan(std::span<const Cell> cells, double eps,
                            int min_pts) {
    if (!(eps > 0.0) || min_pts < 1) {
        throw ValidationError("dbscan requires eps > 0 and min_pts >= 1");
    }
    const int n = static_cast<int>(cells.size());
    std::vector<Cell> pts(cells.begin(), cells.end());
    std::sort(pts.begin(), pts.end(), [](const Cell& a, const Cell& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });

    // Bucket grid of side eps for neighbor queries.
    const int bucket = std::max(1, static_cast<int>(std::floor(eps)));
    std::map<std::pair<int, int>, std::vector<int>> buckets;
    for (int k = 0; k < n; ++k) {
        buckets[{pts[k].u / bucket, pts[k].v / bucket}].push_back(k);
    }
    const double eps2 = eps * eps;
    const int reach = static_cast<int>(std::ceil(eps / bucket)) + 1;
    auto neighbors = [&](int k) {
        std::vector<int> out;
        const Cell& p = pts[k];
        const int bu = p.u / bucket, bv = p.v / bucket;
        for (int du = -reach; du <= reach; ++du) {
            for (int dv = -reach; dv <= reach; ++dv) {
                auto it = buckets.find({bu + du, bv + dv});
                if (it == buckets.end()) continue;
                for (int q : it->second) {
                    const double ddu = pts[q].u - p.u;
                    const double ddv = pts[q].v - p.v;
                    if (ddu * ddu + ddv * ddv <= eps2) out.push_back(q);
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    constexpr int kUndef = -2, kNoise = -1;
    std::vector<int> label(n, kUndef);
    int cid = 0;
    for (int k = 0; k < n; ++k) {
        if (label[k] != kUndef) continue;
        std::vector<int> nb = neighbors(k);
        if (static_cast<int>(nb.size()) < min_pts) {
            label[k] = kNoise;
            continue;
        }
        label[k] = cid;
        std::deque<int> seeds(nb.begin(), nb.end());
        while (!seeds.empty()) {
            const int q = seeds.front();
            seeds.pop_front();
            if (label[q] == kNoise) label[q] = cid;  // border point
            if (label[q] != kUndef) continue;
            label[q] = cid;
            std::vector<int> nq = neighbors(q);
            if (static_cast<int>(nq.size()) >= min_pts) {
                seeds.insert(seeds.end(), nq.begin(), nq.end());
            }
        }
        ++cid;
    }

    std::vector<Cluster> clusters(cid);
    for (int k = 0; k < n; ++k) {
        if (label[k] >= 0) clusters[label[k]].members.push_back(pts[k]);
    }
    for (Cluster& c : clusters) {
        double su = 0.0, sv = 0.0;
        for (const Cell& m : c.members) {
            su += m.u;
            sv += m.v;
        }
        c.center = {static_cast<int>(std::lround(su / c.members.size())),
                    static_cast<int>(std::lround(sv / c.members.size()))};
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) {
                  return a.center.u != b.center.u ? a.center.u < b.center.u
                                                  : a.center.v < b.center.v;
              });
    return clusters;
}

LocalizeResult localize_landmark(const VLMap& map, const std::string& landmark,
                                 const Pose& pose, const LocalizerConfig& cfg,
                                 const TextEncoder& encoder) {
    const LabelGrid grid = label_map(map, landmark, cfg.default_labels, encoder);
    std::vector<Cell> target_cells;
    for (int u = 0; u < grid.rows; ++u) {
        for (int v = 0; v < grid.cols; ++v) {
            if (grid.label_at({u, v}) == 0) target_cells.push_back({u, v});
        }
    }
    if (target_cells.empty()) throw LandmarkNotFound(landmark);

    const std::vector<Cluster> clusters =
        dbscan(target_cells, cfg.dbscan_eps, cfg.dbscan_min_pts);
    if (clusters.empty()) throw LandmarkNotFound(landmark);

    auto distance = [&](const Cluster& c) {
        return (map.cell_center_world(c.center) - pose.position()).norm();
    };
    auto in_front = [&](const Cluster& c) {
        const Vec2 d = map.cell_center_world(c.center) - pose.position();
        const double bearing = std::atan2(d.y, d.x);
        return std::abs(wrap_angle(bearing - pose.theta)) <=
               std::numbers::pi / 2.0;
    };

    const Cluster* best = nullptr;
    bool best_front = false;
    double best_dist = 0.0;
    for (const Cluster& c : clusters) {
        const bool front = in_front(c);
        const double dist = distance(c);
        if (!best || (front && !best_front) ||
            (front == best_front && dist < best_dist)) {
            best = &c;
            best_front = front;
            best_dist = dist;
        }
    }
    return {*best, !best_front};
}

Waypoint propose_waypoint(const MacroAction& macro, const VLMap& map,
                          const Pose& pose, const LocalizerConfig& cfg,
                          const TextEncoder& encoder, std::optional<Pose> anchor) {
    const Pose& view = anchor.value_or(pose);
    switch (macro.name) {
        case MacroName::kMoveForward:
        case MacroName::kTurnLeft:
        case MacroName::kTurnRight: {
            Waypoint wp = ground_pure_motion(macro, pose, cfg);
            wp.cell = require_cell(map, wp.world, "pure-motion waypoint");
            return wp;
        }
        case MacroName::kStop:
            return finish_waypoint(pose.position(),
                                   require_cell(map, pose.position(), "pose"),
                                   pose, std::nullopt, false);
        case MacroName::kFace: {
            const auto loc =
                localize_landmark(map, macro.landmark, pose, cfg, encoder);
            const Vec2 center = map.cell_center_world(loc.cluster.center);
            const Vec2 d = center - pose.position();
            Waypoint wp = finish_waypoint(
                pose.position(), require_cell(map, pose.position(), "pose"),
                pose, wrap_angle(std::atan2(d.y, d.x)), loc.fallback_behind);
            return wp;
        }
        case MacroName::kMoveTo: {
            const auto loc =
                localize_landmark(map, macro.landmark, pose, cfg, encoder);
            const Vec2 center = map.cell_center_world(loc.cluster.center);
            return finish_waypoint(center, loc.cluster.center, pose,
                                   std::nullopt, loc.fallback_behind);
        }
        case MacroName::kMoveToLeft:
        case MacroName::kMoveToRight:
        case MacroName::kMoveToFront: {
            const auto loc =
                localize_landmark(map, macro.landmark, pose, cfg, encoder);
            const Vec2 center = map.cell_center_world(loc.cluster.center);
            const Vec2 approach = (center - view.position()).normalized();
            Vec2 offset_dir;
            if (macro.name == MacroName::kMoveToLeft) {
                offset_dir = rotate_left(approach);
            } else if (macro.name == MacroName::kMoveToRight) {
                offset_dir = rotate_right(approach);
            } else {
                offset_dir = approach * -1.0;  // toward the agent
            }
            const Vec2 target = center + offset_dir * cfg.offset_delta;
            const auto snapped = snap_to_free(map, target, cfg.snap_radius);
            if (!snapped) {
                throw NoFreeCellNearOffset(
                    "no free cell within " + std::to_string(cfg.snap_radius) +
                    " m of the " + to_string(macro.name) + " offset for \"" +
                    macro.landmark + "\"");
            }
            return finish_waypoint(*snapped,
                                   require_cell(map, *snapped, "offset waypoint"),
                                   pose, std::nullopt, loc.fallback_behind);
        }
        case MacroName::kMoveInBetween: {
            const auto a =
                localize_landmark(map, macro.landmark, pose, cfg, encoder);
            const auto b =
                localize_landmark(map, macro.landmark2, pose, cfg, encoder);
            const Vec2 mid = (map.cell_center_world(a.cluster.center) +
                              map.cell_center_world(b.cluster.center)) *
                             0.5;
            return finish_waypoint(mid, require_cell(map, mid, "midpoint"), pose,
                                   std::nullopt,
                                   a.fallback_behind || b.fallback_behind);
        }
    }
    throw ValidationError("unhandled macro kind");
}

}  // namespace vlnav
