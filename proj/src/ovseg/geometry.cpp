#include "ovseg/geometry.hpp"

#include "ovseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ovseg::geometry {

void Intrinsics::validate() const {
    require(fx > 0.0 && fy > 0.0, ErrorCode::InvalidArgument, "intrinsics: focal lengths must be positive");
    require(width > 0 && height > 0, ErrorCode::InvalidArgument, "intrinsics: image dimensions must be positive");
    require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height, ErrorCode::InvalidArgument,
            "intrinsics: principal point outside the image");
}

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    require(right.norm() > 1e-9, ErrorCode::InvalidArgument, "look_at: view direction parallel to up");
    right.normalize();
    const Vec3 down = forward.cross(right);
    Pose pose;
    pose.rotation.col(0) = right;
    pose.rotation.col(1) = down;
    pose.rotation.col(2) = forward;
    pose.translation = eye;
    return pose;
}

void Pose::validate() const {
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    require(ortho <= 1e-6, ErrorCode::InvalidArgument, "pose: rotation is not orthonormal");
    require(std::abs(rotation.determinant() - 1.0) <= 1e-6, ErrorCode::InvalidArgument,
            "pose: rotation determinant is not 1");
    require(translation.allFinite(), ErrorCode::InvalidArgument, "pose: translation not finite");
}

DepthImage::DepthImage(int width, int height, float fill)
    : width_(width), height_(height),
      meters_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {}

DepthImage::DepthImage(int width, int height, std::vector<float> meters)
    : width_(width), height_(height), meters_(std::move(meters)) {
    require(meters_.size() == static_cast<std::size_t>(width) * height, ErrorCode::SizeMismatch,
            "depth image: sample count does not match dimensions");
}

bool DepthImage::valid(int u, int v) const {
    return in_bounds(u, v) && is_valid_depth(at(u, v));
}

void Frame::validate() const {
    intrinsics.validate();
    pose.validate();
    require(depth.width() == intrinsics.width && depth.height() == intrinsics.height,
            ErrorCode::SizeMismatch, "frame " + std::to_string(id) + ": depth size differs from intrinsics");
    for (float d : depth.data()) {
        require(d == 0.0f || d != d || d > 0.0f, ErrorCode::InvalidDepth,
                "frame " + std::to_string(id) + ": negative depth sample");
    }
}

Vec3 back_project(Pixel pixel, const Frame& frame) {
    if (!frame.depth.in_bounds(pixel.u, pixel.v)) {
        std::ostringstream msg;
        msg << "pixel (" << pixel.u << ", " << pixel.v << ") outside " << frame.depth.width() << "x"
            << frame.depth.height() << " image";
        fail(ErrorCode::OutOfBounds, msg.str());
    }
    const float d = frame.depth.at(pixel.u, pixel.v);
    if (!is_valid_depth(d)) {
        std::ostringstream msg;
        msg << "invalid depth at pixel (" << pixel.u << ", " << pixel.v << ")";
        fail(ErrorCode::InvalidDepth, msg.str());
    }
    const auto& k = frame.intrinsics;
    const Vec3 ray((pixel.u - k.cx) / k.fx, (pixel.v - k.cy) / k.fy, 1.0);
    return frame.pose.to_world(ray * static_cast<double>(d));
}

Projection project(const Vec3& point, const Frame& frame) {
    require(point.allFinite(), ErrorCode::InvalidArgument, "project: point not finite");
    const Vec3 cam = frame.pose.to_camera(point);
    if (cam.z() <= 0.0) fail(ErrorCode::BehindCamera, "project: point behind the camera");
    const auto& k = frame.intrinsics;
    return {Vec2(k.fx * cam.x() / cam.z() + k.cx, k.fy * cam.y() / cam.z() + k.cy), cam.z()};
}

VoxelSet::VoxelSet(double voxel_size, std::vector<VoxelKey> keys)
    : voxel_size_(voxel_size), keys_(std::move(keys)) {
    require(voxel_size_ > 0.0, ErrorCode::InvalidArgument, "voxel size must be positive");
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
    if (!keys_.empty()) {
        lower_ = upper_ = keys_.front();
        for (const auto& k : keys_) {
            lower_ = {std::min(lower_.x, k.x), std::min(lower_.y, k.y), std::min(lower_.z, k.z)};
            upper_ = {std::max(upper_.x, k.x), std::max(upper_.y, k.y), std::max(upper_.z, k.z)};
        }
    }
}

bool VoxelSet::contains(const VoxelKey& key) const {
    return std::binary_search(keys_.begin(), keys_.end(), key);
}

VoxelKey voxel_of(const Vec3& point, double voxel_size) {
    return {static_cast<std::int32_t>(std::floor(point.x() / voxel_size)),
            static_cast<std::int32_t>(std::floor(point.y() / voxel_size)),
            static_cast<std::int32_t>(std::floor(point.z() / voxel_size))};
}

VoxelSet voxelize(std::span<const Vec3> points, double voxel_size) {
    require(voxel_size > 0.0, ErrorCode::InvalidArgument, "voxelize: voxel size must be positive");
    require(!points.empty(), ErrorCode::EmptyInput, "voxelize: no points");
    std::vector<VoxelKey> keys;
    keys.reserve(points.size());
    for (const auto& p : points) keys.push_back(voxel_of(p, voxel_size));
    return VoxelSet(voxel_size, std::move(keys));
}

std::size_t intersection_count(const VoxelSet& a, const VoxelSet& b) {
    const auto lo = a.lower(), hi = a.upper(), blo = b.lower(), bhi = b.upper();
    if (a.empty() || b.empty() || hi.x < blo.x || bhi.x < lo.x || hi.y < blo.y || bhi.y < lo.y ||
        hi.z < blo.z || bhi.z < lo.z) {
        return 0;
    }
    const auto& ka = a.occupied();
    const auto& kb = b.occupied();
    std::size_t count = 0;
    auto ia = ka.begin();
    auto ib = kb.begin();
    while (ia != ka.end() && ib != kb.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

IoV voxel_iov(const VoxelSet& a, const VoxelSet& b) {
    require(a.voxel_size() == b.voxel_size(), ErrorCode::SizeMismatch, "voxel_iov: voxel sizes differ");
    require(!a.empty() && !b.empty(), ErrorCode::EmptyInput, "voxel_iov: empty voxel set");
    const std::size_t shared = intersection_count(a, b);
    return {static_cast<double>(shared) / static_cast<double>(a.size()),
            static_cast<double>(shared) / static_cast<double>(b.size()), shared};
}

Box3 Box3::bounding(std::span<const Vec3> points) {
    require(!points.empty(), ErrorCode::EmptyInput, "bounding box of no points");
    Box3 box{points.front(), points.front()};
    for (const auto& p : points) {
        box.min_corner = box.min_corner.cwiseMin(p);
        box.max_corner = box.max_corner.cwiseMax(p);
    }
    return box;
}

double Box3::volume() const {
    const Vec3 e = extent().cwiseMax(0.0);
    return e.x() * e.y() * e.z();
}

void Box3::validate() const {
    require((min_corner.array() <= max_corner.array()).all(), ErrorCode::InvalidArgument,
            "box: min corner exceeds max corner");
}

double box_iou3d(const Box3& a, const Box3& b) {
    const Vec3 lo = a.min_corner.cwiseMax(b.min_corner);
    const Vec3 hi = a.max_corner.cwiseMin(b.max_corner);
    const Vec3 overlap = (hi - lo).cwiseMax(0.0);
    const double inter = overlap.x() * overlap.y() * overlap.z();
    const double uni = a.volume() + b.volume() - inter;
    if (uni <= 0.0) {
        return (a.min_corner == b.min_corner && a.max_corner == b.max_corner) ? 1.0 : 0.0;
    }
    return std::clamp(inter / uni, 0.0, 1.0);
}

Vec3 centroid(std::span<const Vec3> points) {
    require(!points.empty(), ErrorCode::EmptyInput, "centroid of no points");
    Vec3 sum = Vec3::Zero();
    for (const auto& p : points) sum += p;
    return sum / static_cast<double>(points.size());
}

}  // namespace ovseg::geometry
