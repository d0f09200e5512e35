#include "vlnav/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "vlnav/errors.hpp"
#include "vlnav/rng.hpp"

namespace vlnav {
namespace {

constexpr double kRayEps = 1e-12;

// Slab intersection; returns the entry parameter along the (unnormalized)
// ray, or nothing when the box is missed or lies behind the origin.
std::optional<double> ray_aabb(const Vec3& o, const Vec3& dir, const Box3& b) {
    double t_lo = 0.0;
    double t_hi = std::numeric_limits<double>::infinity();
    const double od[3] = {o.x, o.y, o.z};
    const double dd[3] = {dir.x, dir.y, dir.z};
    const double mn[3] = {b.min.x, b.min.y, b.min.z};
    const double mx[3] = {b.max.x, b.max.y, b.max.z};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dd[a]) < kRayEps) {
            if (od[a] < mn[a] || od[a] > mx[a]) return std::nullopt;
            continue;
        }
        double t0 = (mn[a] - od[a]) / dd[a];
        double t1 = (mx[a] - od[a]) / dd[a];
        if (t0 > t1) std::swap(t0, t1);
        t_lo = std::max(t_lo, t0);
        t_hi = std::min(t_hi, t1);
        if (t_lo > t_hi) return std::nullopt;
    }
    if (t_lo <= kRayEps) return std::nullopt;  // origin inside or touching
    return t_lo;
}

struct Hit {
    double t{std::numeric_limits<double>::infinity()};
    std::int16_t class_id{kClassNone};
};

}  // namespace

const char* to_string(Action a) {
    switch (a) {
        case Action::kMoveForward: return "move_forward";
        case Action::kTurnLeft: return "turn_left";
        case Action::kTurnRight: return "turn_right";
        case Action::kStop: return "stop";
    }
    return "?";
}

Action action_from_string(const std::string& s) {
    if (s == "move_forward") return Action::kMoveForward;
    if (s == "turn_left") return Action::kTurnLeft;
    if (s == "turn_right") return Action::kTurnRight;
    if (s == "stop") return Action::kStop;
    throw ValidationError("unknown action: " + s);
}

bool agent_collides(const Scene& scene, double x, double y, double radius) {
    if (x - radius < 0.0 || y - radius < 0.0 || x + radius > scene.width ||
        y + radius > scene.height) {
        return true;
    }
    for (const SceneObject& obj : scene.objects) {
        const Box3& b = obj.box;
        const double px = std::clamp(x, b.min.x, b.max.x);
        const double py = std::clamp(y, b.min.y, b.max.y);
        const double dx = x - px, dy = y - py;
        if (dx * dx + dy * dy <= radius * radius) return true;
    }
    return false;
}

StepResult step_agent(const Scene& scene, const Pose& pose, Action action,
                      const MotionConfig& motion) {
    switch (action) {
        case Action::kMoveForward: {
            const double nx = pose.x + motion.forward_step * std::cos(pose.theta);
            const double ny = pose.y + motion.forward_step * std::sin(pose.theta);
            if (agent_collides(scene, nx, ny, motion.agent_radius)) {
                return {pose, true};
            }
            return {Pose{nx, ny, pose.theta}, false};
        }
        case Action::kTurnLeft:
            return {Pose::make(pose.x, pose.y, pose.theta - motion.turn_step),
                    false};
        case Action::kTurnRight:
            return {Pose::make(pose.x, pose.y, pose.theta + motion.turn_step),
                    false};
        case Action::kStop:
            return {pose, false};
    }
    return {pose, false};
}

Observation render(const Scene& scene, const Pose& pose,
                   const CameraConfig& cam) {
    Observation obs;
    obs.width = cam.width;
    obs.height = cam.height;
    obs.depth.assign(static_cast<std::size_t>(cam.width) * cam.height, 0.0f);
    obs.class_ids.assign(static_cast<std::size_t>(cam.width) * cam.height,
                         kClassNone);

    const CameraBasis basis = camera_basis(pose, cam);

    // Precompute class ids once per object.
    std::vector<std::int16_t> obj_class(scene.objects.size());
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        obj_class[k] =
            static_cast<std::int16_t>(scene.class_id(scene.objects[k].class_name));
    }

    for (int j = 0; j < cam.height; ++j) {
        for (int i = 0; i < cam.width; ++i) {
            const double xc = (i - cam.cx) / cam.fx;
            const double yc = (j - cam.cy) / cam.fy;
            // Unnormalized world ray with unit camera-z component, so the ray
            // parameter equals camera-frame depth.
            const Vec3 dir = basis.right * xc + basis.down * yc + basis.forward;

            Hit best;
            for (std::size_t k = 0; k < scene.objects.size(); ++k) {
                if (auto t = ray_aabb(basis.origin, dir, scene.objects[k].box)) {
                    if (*t < best.t) best = {*t, obj_class[k]};
                }
            }
            // Floor plane z = 0.
            if (dir.z < -kRayEps) {
                const double t = -basis.origin.z / dir.z;
                if (t > kRayEps && t < best.t) {
                    const double hx = basis.origin.x + t * dir.x;
                    const double hy = basis.origin.y + t * dir.y;
                    if (scene.inside_bounds(hx, hy)) best = {t, kClassFloor};
                }
            }
            // Boundary walls: vertical planes at x=0, x=W, y=0, y=H.
            const double planes[4] = {0.0, scene.width, 0.0, scene.height};
            for (int w = 0; w < 4; ++w) {
                const bool x_plane = w < 2;
                const double denom = x_plane ? dir.x : dir.y;
                if (std::abs(denom) < kRayEps) continue;
                const double org = x_plane ? basis.origin.x : basis.origin.y;
                const double t = (planes[w] - org) / denom;
                if (t <= kRayEps || t >= best.t) continue;
                const double hz = basis.origin.z + t * dir.z;
                const double lat = x_plane ? basis.origin.y + t * dir.y
                                           : basis.origin.x + t * dir.x;
                const double lat_max = x_plane ? scene.height : scene.width;
                if (hz >= 0.0 && lat >= 0.0 && lat <= lat_max) {
                    best = {t, kClassWall};
                }
            }

            if (std::isfinite(best.t) && best.t >= cam.depth_min &&
                best.t <= cam.depth_max) {
                obs.depth[j * cam.width + i] = static_cast<float>(best.t);
                obs.class_ids[j * cam.width + i] = best.class_id;
            }
        }
    }
    return obs;
}

void apply_depth_dropout(Observation& obs, double drop_fraction,
                         std::uint64_t seed) {
    if (drop_fraction <= 0.0) return;
    Rng rng(seed);
    for (std::size_t p = 0; p < obs.depth.size(); ++p) {
        if (obs.depth[p] > 0.0f && rng.uniform() < drop_fraction) {
            obs.depth[p] = 0.0f;
            obs.class_ids[p] = kClassNone;
        }
    }
}

}  // namespace vlnav
