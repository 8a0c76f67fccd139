#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ovseg::geometry {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDefaultVoxelSize = 0.05;

struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const;
};

// Camera-to-world rigid transform. Camera axes follow the pinhole convention:
// x right, y down, z forward.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return {}; }
    // Camera at `eye` looking at `target`; `up` is the world up direction.
    static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

    Vec3 to_world(const Vec3& camera_point) const { return rotation * camera_point + translation; }
    Vec3 to_camera(const Vec3& world_point) const {
        return rotation.transpose() * (world_point - translation);
    }

    void validate() const;
};

// Z-depth in meters, row-major. 0 or NaN marks an invalid sample.
class DepthImage {
public:
    DepthImage() = default;
    DepthImage(int width, int height, float fill = 0.0f);
    DepthImage(int width, int height, std::vector<float> meters);

    int width() const { return width_; }
    int height() const { return height_; }
    float at(int u, int v) const { return meters_[static_cast<std::size_t>(v) * width_ + u]; }
    float& at(int u, int v) { return meters_[static_cast<std::size_t>(v) * width_ + u]; }
    bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }
    bool valid(int u, int v) const;
    std::span<const float> data() const { return meters_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> meters_;
};

inline bool is_valid_depth(float d) { return d > 0.0f && d == d; }

struct Frame {
    std::uint32_t id = 0;
    DepthImage depth;
    Intrinsics intrinsics;
    Pose pose;
    std::optional<std::string> rgb_path;

    void validate() const;
};

struct Pixel {
    int u = 0;
    int v = 0;
};

struct Projection {
    Vec2 pixel;
    double depth = 0.0;
};

Vec3 back_project(Pixel pixel, const Frame& frame);
Projection project(const Vec3& point, const Frame& frame);

struct VoxelKey {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t z = 0;

    auto operator<=>(const VoxelKey&) const = default;
};

// Occupied cells of a regular grid. Keys are kept sorted and unique so that
// set algebra is a linear merge.
class VoxelSet {
public:
    VoxelSet() = default;
    VoxelSet(double voxel_size, std::vector<VoxelKey> keys);

    double voxel_size() const { return voxel_size_; }
    const std::vector<VoxelKey>& occupied() const { return keys_; }
    std::size_t size() const { return keys_.size(); }
    bool empty() const { return keys_.empty(); }
    bool contains(const VoxelKey& key) const;

    VoxelKey lower() const { return lower_; }
    VoxelKey upper() const { return upper_; }

private:
    double voxel_size_ = kDefaultVoxelSize;
    std::vector<VoxelKey> keys_;
    VoxelKey lower_{};
    VoxelKey upper_{};
};

VoxelKey voxel_of(const Vec3& point, double voxel_size);
VoxelSet voxelize(std::span<const Vec3> points, double voxel_size);

struct IoV {
    double ab = 0.0;  // |a ∩ b| / |a|
    double ba = 0.0;  // |a ∩ b| / |b|
    std::size_t intersection = 0;
};

std::size_t intersection_count(const VoxelSet& a, const VoxelSet& b);
IoV voxel_iov(const VoxelSet& a, const VoxelSet& b);

struct Box3 {
    Vec3 min_corner = Vec3::Zero();
    Vec3 max_corner = Vec3::Zero();

    static Box3 bounding(std::span<const Vec3> points);
    Vec3 extent() const { return max_corner - min_corner; }
    Vec3 center() const { return 0.5 * (min_corner + max_corner); }
    double volume() const;
    void validate() const;
};

double box_iou3d(const Box3& a, const Box3& b);

Vec3 centroid(std::span<const Vec3> points);

}  // namespace ovseg::geometry
