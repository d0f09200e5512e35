#pragma once

#include <cstdint>
#include <vector>

#include "vlnav/geometry.hpp"

namespace vlnav {

// Pinhole intrinsics plus the camera mount on the agent. Pitch is the
// elevation of the optical axis above the horizon (negative looks down).
struct CameraConfig {
    double fx{60.0};
    double fy{60.0};
    double cx{39.5};
    double cy{29.5};
    int width{80};
    int height{60};
    double mount_height{0.53};
    double pitch{deg2rad(-15.7)};
    double depth_min{0.3};
    double depth_max{5.0};
};

// Per-pixel class sentinels alongside indices into Scene::class_table.
constexpr std::int16_t kClassNone = -1;
constexpr std::int16_t kClassFloor = -2;
constexpr std::int16_t kClassWall = -3;

// Depth is measured along the camera z axis, 0 marks an invalid pixel.
// Pixel (i, j): i = column, j = row; storage is row-major.
struct Observation {
    int width{0};
    int height{0};
    std::vector<float> depth;
    std::vector<std::int16_t> class_ids;

    float depth_at(int i, int j) const { return depth[j * width + i]; }
    std::int16_t class_at(int i, int j) const { return class_ids[j * width + i]; }
    bool valid(int i, int j) const { return depth[j * width + i] > 0.0f; }
};

// Orthonormal camera frame in world coordinates: right/down match the image
// axes, forward is the optical axis, origin sits mount_height above the
// agent position.
struct CameraBasis {
    Vec3 right;
    Vec3 down;
    Vec3 forward;
    Vec3 origin;
};

inline CameraBasis camera_basis(const Pose& pose, const CameraConfig& cam) {
    const double ct = std::cos(pose.theta), st = std::sin(pose.theta);
    const double cp = std::cos(cam.pitch), sp = std::sin(cam.pitch);
    CameraBasis b;
    b.forward = {ct * cp, st * cp, sp};
    b.right = {-st, ct, 0.0};
    b.down = {ct * sp, st * sp, -cp};
    b.origin = {pose.x, pose.y, cam.mount_height};
    return b;
}

}  // namespace vlnav
