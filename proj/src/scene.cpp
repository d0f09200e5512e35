#include "vlnav/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vlnav/errors.hpp"

namespace vlnav {
namespace {

using nlohmann::json;

Vec3 read_vec3(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError(ctx + ": expected an array of 3 numbers");
    }
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(ctx + ": non-numeric component");
    }
    return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void validate(const Scene& scene, const std::string& origin) {
    auto fail = [&](const std::string& what) {
        throw ValidationError(origin + ": " + what);
    };
    if (!(scene.width > 0.0) || !(scene.height > 0.0)) {
        fail("bounds must be positive");
    }
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        const SceneObject& obj = scene.objects[k];
        const std::string ctx = "objects[" + std::to_string(k) + "]";
        if (obj.class_name.empty()) fail(ctx + ": class name is empty");
        const Box3& b = obj.box;
        if (!(b.min.x < b.max.x) || !(b.min.y < b.max.y) ||
            !(b.min.z < b.max.z)) {
            fail(ctx + ": box min must be strictly below max on every axis");
        }
        if (b.min.x < 0.0 || b.min.y < 0.0 || b.min.z < 0.0 ||
            b.max.x > scene.width || b.max.y > scene.height) {
            fail(ctx + ": box extends outside scene bounds");
        }
        for (double v : {b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z}) {
            if (!std::isfinite(v)) fail(ctx + ": non-finite corner");
        }
    }
}

}  // namespace

int Scene::class_id(std::string_view name) const {
    auto it = std::lower_bound(class_table.begin(), class_table.end(), name);
    if (it == class_table.end() || *it != name) return -1;
    return static_cast<int>(it - class_table.begin());
}

Scene parse_scene(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }

    Scene scene;
    if (!j.is_object()) throw ParseError(origin + ": top level must be an object");
    if (!j.contains("bounds") || !j["bounds"].is_array() ||
        j["bounds"].size() != 2) {
        throw ParseError(origin + ": \"bounds\" must be [W, H]");
    }
    scene.width = j["bounds"][0].get<double>();
    scene.height = j["bounds"][1].get<double>();

    std::set<std::string> classes;
    if (j.contains("objects")) {
        if (!j["objects"].is_array()) {
            throw ParseError(origin + ": \"objects\" must be an array");
        }
        std::size_t k = 0;
        for (const auto& jo : j["objects"]) {
            const std::string ctx =
                origin + ": objects[" + std::to_string(k) + "]";
            if (!jo.is_object()) throw ParseError(ctx + " must be an object");
            SceneObject obj;
            if (!jo.contains("class") || !jo["class"].is_string()) {
                throw ParseError(ctx + ": missing string field \"class\"");
            }
            obj.class_name = jo["class"].get<std::string>();
            if (!jo.contains("min") || !jo.contains("max")) {
                throw ParseError(ctx + ": missing \"min\"/\"max\" corners");
            }
            obj.box.min = read_vec3(jo["min"], ctx + ".min");
            obj.box.max = read_vec3(jo["max"], ctx + ".max");
            classes.insert(obj.class_name);
            scene.objects.push_back(std::move(obj));
            ++k;
        }
    }
    scene.class_table.assign(classes.begin(), classes.end());

    validate(scene, origin);
    return scene;
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open scene file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str(), path);
}

}  // namespace vlnav
