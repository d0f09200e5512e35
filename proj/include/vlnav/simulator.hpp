#pragma once

#include <cstdint>
#include <string>

#include "vlnav/camera.hpp"
#include "vlnav/geometry.hpp"
#include "vlnav/scene.hpp"

namespace vlnav {

enum class Action : std::uint8_t { kMoveForward, kTurnLeft, kTurnRight, kStop };

const char* to_string(Action a);
Action action_from_string(const std::string& s);

struct MotionConfig {
    double forward_step{0.25};
    double turn_step{deg2rad(15.0)};
    double agent_radius{0.18};
};

struct StepResult {
    Pose pose;
    bool collided{false};
};

// True if a disc of the given radius at (x, y) overlaps an object footprint
// or pokes outside the scene bounds.
bool agent_collides(const Scene& scene, double x, double y, double radius);

// Discrete motion model: a blocked move_forward leaves the pose unchanged
// and reports the collision; turns and stop never collide.
StepResult step_agent(const Scene& scene, const Pose& pose, Action action,
                      const MotionConfig& motion = {});

// Raycasts one depth + class image. Pure function of its arguments; rays hit
// the nearest of object boxes, the floor plane z=0 and the boundary walls.
// Hits outside [depth_min, depth_max] yield invalid pixels.
Observation render(const Scene& scene, const Pose& pose,
                   const CameraConfig& cam);

// Optional sensor degradation: invalidates each valid pixel independently
// with probability drop_fraction.
void apply_depth_dropout(Observation& obs, double drop_fraction,
                         std::uint64_t seed);

}  // namespace vlnav
