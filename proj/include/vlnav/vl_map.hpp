#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlnav/camera.hpp"
#include "vlnav/feature_space.hpp"
#include "vlnav/geometry.hpp"

namespace vlnav {

struct Cell {
    int u{0};  // row
    int v{0};  // col
    bool operator==(const Cell&) const = default;
};

enum class Occupancy : std::uint8_t { kUnknown = 0, kFree = 1, kOccupied = 2 };

struct OccGrid {
    int rows{0};
    int cols{0};
    std::vector<Occupancy> cells;

    OccGrid() = default;
    OccGrid(int r, int c) : rows(r), cols(c), cells(std::size_t(r) * c) {}
    Occupancy at(Cell c) const { return cells[std::size_t(c.u) * cols + c.v]; }
    void set(Cell c, Occupancy o) { cells[std::size_t(c.u) * cols + c.v] = o; }
    bool in_bounds(Cell c) const {
        return c.u >= 0 && c.u < rows && c.v >= 0 && c.v < cols;
    }
};

// Grid geometry: row u grows with world y, column v with world x, and the
// world origin of the grid sits at the top-left corner.
struct GridFrame {
    int rows{0};
    int cols{0};
    double resolution{0.05};
    Vec2 origin{0.0, 0.0};  // world coordinates of the top-left corner

    std::optional<Cell> world_to_cell(Vec2 w) const {
        const Cell c{static_cast<int>(std::floor((w.y - origin.y) / resolution)),
                     static_cast<int>(std::floor((w.x - origin.x) / resolution))};
        if (c.u < 0 || c.u >= rows || c.v < 0 || c.v >= cols) return std::nullopt;
        return c;
    }
    Vec2 cell_center(Cell c) const {
        return {origin.x + (c.v + 0.5) * resolution,
                origin.y + (c.u + 0.5) * resolution};
    }
};

// Camera-frame point tagged with its source pixel.
struct CameraPoint {
    int i{0};
    int j{0};
    Vec3 p;
};

// World-frame point tagged with its source pixel; z is height above floor.
struct WorldPoint {
    int i{0};
    int j{0};
    Vec3 p;
};

// World points paired with their pixel features, packed dim doubles apiece.
struct PointCloudFrame {
    int dim{0};
    std::vector<Vec3> points;
    std::vector<double> features;

    std::size_t size() const { return points.size(); }
    std::span<const double> feature(std::size_t k) const {
        return {features.data() + k * dim, static_cast<std::size_t>(dim)};
    }
};

struct MapConfig {
    int cells_h{480};
    int cells_w{480};
    double resolution{0.05};
    double band_low{0.1};   // min height for the obstacle band
    double band_high{1.5};  // max height for the obstacle band
    bool ray_free{true};    // mark cells between sensor and hit as free
};

// 2-D grid of fused per-cell features (running mean via sum + count), plus an
// occupancy channel. One writer at a time; reads between updates are safe.
class VLMap {
public:
    VLMap(const MapConfig& cfg, int dim, Vec2 origin = {0.0, 0.0});

    const GridFrame& frame() const { return frame_; }
    int rows() const { return frame_.rows; }
    int cols() const { return frame_.cols; }
    int dim() const { return dim_; }
    double resolution() const { return frame_.resolution; }

    std::optional<Cell> world_to_map(Vec2 w) const { return frame_.world_to_cell(w); }
    Vec2 cell_center_world(Cell c) const { return frame_.cell_center(c); }

    std::uint32_t count_at(Cell c) const { return counts_[index(c)]; }
    bool observed(Cell c) const { return counts_[index(c)] > 0; }
    Occupancy occ_at(Cell c) const { return occ_.at(c); }
    const OccGrid& occupancy() const { return occ_; }
    std::uint64_t dropped_points() const { return dropped_; }
    std::uint64_t revision() const { return revision_; }

    // Mean of all fused unit features; norm <= 1. Empty span for unobserved.
    void feature_mean(Cell c, std::span<double> out) const;
    std::vector<double> feature_mean(Cell c) const;

    // Fuses one frame: obstacle-band points update the running feature mean
    // and mark occupied; floor-band points mark free; when enabled, cells on
    // the 2-D ray from sensor_xy to each hit are marked free up to the hit.
    // Out-of-map points increment dropped_points().
    void update(const PointCloudFrame& frame, std::optional<Vec2> sensor_xy);

    void export_features(const std::string& path) const;
    void export_occupancy_pgm(const std::string& path) const;
    void export_counts_csv(const std::string& path) const;

private:
    std::size_t index(Cell c) const {
        return std::size_t(c.u) * frame_.cols + c.v;
    }
    void mark_free_ray(Cell from, Cell to);

    GridFrame frame_;
    MapConfig cfg_;
    int dim_{0};
    std::vector<double> feat_sum_;
    std::vector<std::uint32_t> counts_;
    OccGrid occ_;
    std::uint64_t dropped_{0};
    std::uint64_t revision_{0};
};

// p_cam = ((i - cx) d / fx, (j - cy) d / fy, d) for every valid pixel.
std::vector<CameraPoint> backproject(const Observation& obs,
                                     const CameraConfig& cam);

// Camera frame -> world frame through the mount (height, pitch) composed
// with the agent pose; output z is height above the floor.
std::vector<WorldPoint> to_world(std::span<const CameraPoint> points,
                                 const Pose& pose, const CameraConfig& cam);

// Pairs world points with their pixel features; pixels without a feature are
// skipped. Throws ValidationError on dimension mismatch.
PointCloudFrame attach_features(std::span<const WorldPoint> points,
                                const FeatureImage& features);

// Cell under the agent; throws ValidationError when the pose left the map.
Cell agent_cell(const Pose& pose, const VLMap& map);

}  // namespace vlnav
