#include "vlnav/vl_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vlnav/errors.hpp"

namespace vlnav {

VLMap::VLMap(const MapConfig& cfg, int dim, Vec2 origin)
    : cfg_(cfg), dim_(dim) {
    frame_.rows = cfg.cells_h;
    frame_.cols = cfg.cells_w;
    frame_.resolution = cfg.resolution;
    frame_.origin = origin;
    feat_sum_.assign(std::size_t(cfg.cells_h) * cfg.cells_w * dim, 0.0);
    counts_.assign(std::size_t(cfg.cells_h) * cfg.cells_w, 0);
    occ_ = OccGrid(cfg.cells_h, cfg.cells_w);
}

void VLMap::feature_mean(Cell c, std::span<double> out) const {
    const std::size_t idx = index(c);
    const std::uint32_t n = counts_[idx];
    const double* sum = feat_sum_.data() + idx * dim_;
    if (n == 0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const double inv = 1.0 / n;
    for (int k = 0; k < dim_; ++k) out[k] = sum[k] * inv;
}

std::vector<double> VLMap::feature_mean(Cell c) const {
    std::vector<double> out(dim_);
    feature_mean(c, out);
    return out;
}

void VLMap::mark_free_ray(Cell from, Cell to) {
    // Bresenham from the sensor cell up to (exclusive) the hit cell.
    int u = from.u, v = from.v;
    const int du = std::abs(to.u - from.u), dv = std::abs(to.v - from.v);
    const int su = from.u < to.u ? 1 : -1, sv = from.v < to.v ? 1 : -1;
    int err = dv - du;
    while (!(u == to.u && v == to.v)) {
        const Cell c{u, v};
        if (!occ_.in_bounds(c)) break;
        if (occ_.at(c) == Occupancy::kUnknown) occ_.set(c, Occupancy::kFree);
        const int e2 = 2 * err;
        if (e2 > -du) {
            err -= du;
            v += sv;
        }
        if (e2 < dv) {
            err += dv;
            u += su;
        }
    }
}

void VLMap::update(const PointCloudFrame& frame, std::optional<Vec2> sensor_xy) {
    if (frame.dim != dim_) {
        throw ValidationError("frame feature dim " + std::to_string(frame.dim) +
                              " does not match map dim " + std::to_string(dim_));
    }
    std::optional<Cell> sensor_cell;
    if (sensor_xy) sensor_cell = frame_.world_to_cell(*sensor_xy);

    for (std::size_t k = 0; k < frame.size(); ++k) {
        const Vec3& p = frame.points[k];
        const auto cell = frame_.world_to_cell({p.x, p.y});
        if (!cell) {
            ++dropped_;
            continue;
        }
        if (p.z > cfg_.band_high) continue;

        if (cfg_.ray_free && sensor_cell) mark_free_ray(*sensor_cell, *cell);

        const std::size_t idx = index(*cell);
        if (p.z >= cfg_.band_low) {
            // Obstacle band: fuse the feature and mark occupied. The stored
            // value is the running sum; the mean is formed on read, which
            // keeps fusion order-invariant.
            const auto f = frame.feature(k);
            double* sum = feat_sum_.data() + idx * dim_;
            for (int d = 0; d < dim_; ++d) sum[d] += f[d];
            counts_[idx] += 1;
            occ_.set(*cell, Occupancy::kOccupied);
        } else if (occ_.at(*cell) != Occupancy::kOccupied) {
            occ_.set(*cell, Occupancy::kFree);
        }
    }
    ++revision_;
}

void VLMap::export_features(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    const char magic[4] = {'V', 'L', 'M', 'P'};
    out.write(magic, 4);
    auto write_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    write_u32(static_cast<std::uint32_t>(frame_.rows));
    write_u32(static_cast<std::uint32_t>(frame_.cols));
    write_u32(static_cast<std::uint32_t>(dim_));

    std::vector<double> mean(dim_);
    std::vector<float> row(std::size_t(frame_.cols) * dim_);
    for (int u = 0; u < frame_.rows; ++u) {
        for (int v = 0; v < frame_.cols; ++v) {
            feature_mean({u, v}, mean);
            for (int d = 0; d < dim_; ++d) {
                row[std::size_t(v) * dim_ + d] = static_cast<float>(mean[d]);
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
}

void VLMap::export_occupancy_pgm(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << "P5\n" << frame_.cols << " " << frame_.rows << "\n255\n";
    std::vector<unsigned char> row(frame_.cols);
    for (int u = 0; u < frame_.rows; ++u) {
        for (int v = 0; v < frame_.cols; ++v) {
            switch (occ_.at({u, v})) {
                case Occupancy::kUnknown: row[v] = 0; break;
                case Occupancy::kFree: row[v] = 128; break;
                case Occupancy::kOccupied: row[v] = 255; break;
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), frame_.cols);
    }
}

void VLMap::export_counts_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    for (int u = 0; u < frame_.rows; ++u) {
        for (int v = 0; v < frame_.cols; ++v) {
            if (v) out << ',';
            out << counts_[std::size_t(u) * frame_.cols + v];
        }
        out << '\n';
    }
}

std::vector<CameraPoint> backproject(const Observation& obs,
                                     const CameraConfig& cam) {
    std::vector<CameraPoint> points;
    points.reserve(std::size_t(obs.width) * obs.height);
    for (int j = 0; j < obs.height; ++j) {
        for (int i = 0; i < obs.width; ++i) {
            const double d = obs.depth[std::size_t(j) * obs.width + i];
            if (d <= 0.0) continue;
            points.push_back(
                {i, j,
                 Vec3{(i - cam.cx) * d / cam.fx, (j - cam.cy) * d / cam.fy, d}});
        }
    }
    return points;
}

std::vector<WorldPoint> to_world(std::span<const CameraPoint> points,
                                 const Pose& pose, const CameraConfig& cam) {
    const CameraBasis b = camera_basis(pose, cam);
    std::vector<WorldPoint> out;
    out.reserve(points.size());
    for (const CameraPoint& cp : points) {
        const Vec3 w =
            b.origin + b.right * cp.p.x + b.down * cp.p.y + b.forward * cp.p.z;
        out.push_back({cp.i, cp.j, w});
    }
    return out;
}

PointCloudFrame attach_features(std::span<const WorldPoint> points,
                                const FeatureImage& features) {
    PointCloudFrame frame;
    frame.dim = features.dim;
    frame.points.reserve(points.size());
    frame.features.reserve(points.size() * features.dim);
    for (const WorldPoint& wp : points) {
        if (!features.has(wp.i, wp.j)) continue;
        frame.points.push_back(wp.p);
        const auto f = features.at(wp.i, wp.j);
        frame.features.insert(frame.features.end(), f.begin(), f.end());
    }
    return frame;
}

Cell agent_cell(const Pose& pose, const VLMap& map) {
    const auto c = map.world_to_map({pose.x, pose.y});
    if (!c) {
        throw ValidationError("agent pose (" + std::to_string(pose.x) + ", " +
                              std::to_string(pose.y) + ") is outside the map");
    }
    return *c;
}

}  // namespace vlnav
