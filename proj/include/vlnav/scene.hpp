#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vlnav/geometry.hpp"

namespace vlnav {

struct Box3 {
    Vec3 min;
    Vec3 max;

    bool contains_xy(double x, double y) const {
        return x >= min.x && x <= max.x && y >= min.y && y <= max.y;
    }
};

struct SceneObject {
    std::string class_name;
    Box3 box;
};

// Declarative world: a rectangular floor with walls at the bounds and a set
// of axis-aligned boxes. Immutable after load and safe to share across
// threads.
struct Scene {
    double width{0.0};   // x extent in meters
    double height{0.0};  // y extent in meters
    std::vector<SceneObject> objects;
    std::vector<std::string> class_table;  // sorted distinct class names

    // Index into class_table, or -1 when the name is unknown.
    int class_id(std::string_view name) const;

    bool inside_bounds(double x, double y) const {
        return x >= 0.0 && x <= width && y >= 0.0 && y <= height;
    }
};

// Parses and validates `{"bounds": [W, H], "objects": [{"class": str,
// "min": [x,y,z], "max": [x,y,z]}]}`. Throws ParseError with file/field
// context on malformed JSON and ValidationError naming the violated
// invariant.
Scene load_scene(const std::string& path);
Scene parse_scene(const std::string& json_text, const std::string& origin);

}  // namespace vlnav
