#pragma once

#include "ovseg/context_embedding.hpp"
#include "ovseg/geometry.hpp"
#include "ovseg/mask.hpp"

#include <compare>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ovseg::fusion {

using geometry::Vec3;

// Provenance of one fusion candidate: raw mask `mask_index` of frame
// `frame_id`, pixel fragment `fragment` of that mask, and 3D cluster `part`
// of the fragment.
struct MaskRef {
    std::uint32_t frame_id = 0;
    std::uint32_t mask_index = 0;
    std::uint32_t fragment = 0;
    std::uint32_t part = 0;

    auto operator<=>(const MaskRef&) const = default;
};

struct Member {
    MaskRef ref;
    embedding::Embedding embedding;  // unit vector; empty when loaded from an object map
    std::uint32_t point_count = 0;
};

// Fused instance. Points are the concatenation of member point sets in
// ascending MaskRef order.
struct Object3D {
    std::uint32_t id = 0;
    std::vector<Vec3> points;
    geometry::VoxelSet voxels;
    embedding::Embedding embedding;
    std::vector<Member> members;

    std::uint32_t merged_count() const { return static_cast<std::uint32_t>(members.size()); }
    std::vector<MaskRef> source_masks() const;
    Vec3 centroid() const { return geometry::centroid(points); }
    geometry::Box3 bounds() const { return geometry::Box3::bounding(points); }
};

struct FusionParams {
    double gamma = 0.25;
    double delta = 0.5;
    double voxel_size = geometry::kDefaultVoxelSize;
    double dbscan_eps_m = 0.1;
    std::size_t dbscan_min_pts = 10;
    std::size_t workers = 1;

    void validate() const;
};

std::vector<Vec3> lift_mask(const masks::Mask2D& mask, const geometry::Frame& frame);

// IoV(a,b) > gamma, IoV(b,a) > gamma and |IoV(a,b) - IoV(b,a)| < delta.
bool merge_criterion(double iov_ab, double iov_ba, double gamma, double delta);
bool try_merge(const Object3D& a, const Object3D& b, const FusionParams& params);

Object3D make_object(MaskRef ref, std::vector<Vec3> points, embedding::Embedding embedding, double voxel_size);
// Members of all inputs, re-sorted; embedding is the renormalized mean over
// every original member in ascending MaskRef order.
Object3D merge_objects(std::span<const Object3D> objs);

std::vector<std::vector<Vec3>> split_3d(std::span<const Vec3> points, const FusionParams& params);

struct MaskObservation {
    masks::Mask2D mask;
    MaskRef ref;  // part is assigned during fusion
    embedding::Embedding embedding;
};

// Supplies an embedding for a split cluster given its re-projected 2D mask.
// Returning nullopt makes the cluster inherit its parent's embedding.
using ReembedHook =
    std::function<std::optional<embedding::Embedding>(const masks::Mask2D& cluster_mask, const MaskObservation& parent)>;

struct FusionStats {
    std::size_t lifted_points = 0;
    std::size_t noise_points = 0;
    std::size_t invalid_depth_masks = 0;
    std::size_t all_noise_masks = 0;
    std::size_t candidates = 0;
    std::size_t merges = 0;
};

struct FusionResult {
    std::vector<Object3D> objects;
    FusionStats stats;
};

// per_frame[i] holds the observations of frames[i].
FusionResult fuse_scene(std::span<const geometry::Frame> frames,
                        std::span<const std::vector<MaskObservation>> per_frame, const FusionParams& params,
                        const ReembedHook& reembed = {});

// Greedy merge to fixpoint over candidates sorted by first member.
std::vector<Object3D> merge_to_fixpoint(std::vector<Object3D> candidates, const FusionParams& params,
                                        std::size_t* merges = nullptr);

}  // namespace ovseg::fusion
