#pragma once

#include "ovseg/context_embedding.hpp"
#include "ovseg/fusion.hpp"
#include "ovseg/geometry.hpp"
#include "ovseg/labeling_eval.hpp"
#include "ovseg/mask.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// On-disk formats. Binary files start with a 4-byte magic and a u32 version;
// all integers and floats are little-endian.
namespace ovseg::dataset {

namespace fs = std::filesystem;
using geometry::Vec3;

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::string_view kManifestFormat = "ovseg-scene";

// Depth: "OVDP", version, u32 width, u32 height, f64 units per meter, then
// width*height u16 samples in raster order. 0 is invalid.
void write_depth(const fs::path& path, const geometry::DepthImage& depth, double depth_scale);
geometry::DepthImage read_depth(const fs::path& path, double expected_scale);
std::string encode_depth(const geometry::DepthImage& depth, double depth_scale);

// Pose: 4x4 camera-to-world matrix as four lines of four numbers.
void write_pose(const fs::path& path, const geometry::Pose& pose);
geometry::Pose read_pose(const fs::path& path);

// Mask archive: "OVMK", version, u32 count, then per mask u32 frame id,
// u32 level, u32 width, u32 height, u32 run count, runs as (u32 start,
// u32 length). Masks of one frame keep their archive order as mask index.
void write_masks(const fs::path& path, std::span<const masks::Mask2D> masks);
std::vector<masks::Mask2D> read_masks(const fs::path& path);

using CropEmbeddings = std::array<embedding::Embedding, embedding::kCropCount>;

// Embedding archive: "OVEM", version, u32 dim, u32 count, five crop-kind
// bytes (canonical order), zero padding to 8 bytes, then count*5*dim f32.
// Record i belongs to mask record i of the paired mask archive.
void write_embeddings(const fs::path& path, std::span<const CropEmbeddings> records);
std::vector<CropEmbeddings> read_embeddings(const fs::path& path);

struct ObjectMap {
    std::string scene_id;
    std::string config_hash;
    double voxel_size = geometry::kDefaultVoxelSize;
    std::vector<fusion::Object3D> objects;
};

// Object map: "OVOM", version, str scene id, str config hash, f64 voxel size,
// u32 dim, u32 count; per object u32 id, u32 member count, u32 point count,
// f32 xyz points, f32 embedding, members as 5 u32 (frame, mask, fragment,
// part, point count). Strings are u32-length prefixed.
std::string encode_object_map(const ObjectMap& map);
void write_object_map(const fs::path& path, const ObjectMap& map);
ObjectMap read_object_map(const fs::path& path);

struct GtObject {
    std::uint32_t id = 0;
    std::size_t class_index = 0;
    geometry::Box3 box;
    std::optional<double> front_yaw;  // radians CCW from +x
};

struct GtPoint {
    Vec3 point = Vec3::Zero();
    std::uint32_t instance = 0;
};

// Per-pixel instance id, -1 for background.
struct InstanceMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> ids;

    std::int32_t at(int u, int v) const { return ids[static_cast<std::size_t>(v) * width + u]; }
};

struct GroundTruth {
    std::vector<std::string> classes;
    std::vector<GtObject> instances;
    std::vector<GtPoint> points;

    const GtObject* find(std::uint32_t id) const;
};

// Annotations as JSON: {"classes": [...], "instances": [{"id", "class",
// "box": [minx, miny, minz, maxx, maxy, maxz], "front_yaw"}]}.
void write_annotations(const fs::path& path, const GroundTruth& gt);
void read_annotations(const fs::path& path, GroundTruth& gt);
// GT points: "OVGT", version, u32 count, then f64 xyz + u32 instance id.
void write_gt_points(const fs::path& path, std::span<const GtPoint> points);
std::vector<GtPoint> read_gt_points(const fs::path& path);
// Instance map: "OVIM", version, u32 width, u32 height, i32 ids.
void write_instance_map(const fs::path& path, const InstanceMap& map);
InstanceMap read_instance_map(const fs::path& path);

struct FrameEntry {
    std::uint32_t id = 0;
    std::string depth;
    std::string pose;
    std::optional<std::string> rgb;
    std::optional<std::string> instances;
};

struct Manifest {
    std::string scene_id;
    geometry::Intrinsics intrinsics;
    double depth_scale = 1000.0;
    int stride = 1;
    std::vector<FrameEntry> frames;
    std::string masks;
    std::string embeddings;
    std::optional<std::string> annotations;
    std::optional<std::string> gt_points;
};

// Paths inside a manifest are relative to the manifest's directory.
void write_manifest(const fs::path& path, const Manifest& manifest);
Manifest read_manifest(const fs::path& path);

struct Scene {
    fs::path manifest_path;
    Manifest manifest;
    std::vector<geometry::Frame> frames;                    // sorted by id
    std::vector<std::vector<masks::Mask2D>> raw_masks;      // aligned with frames
    std::vector<std::vector<CropEmbeddings>> crop_embeddings;  // aligned with raw_masks
    std::optional<GroundTruth> gt;
    std::vector<std::optional<InstanceMap>> instance_maps;  // aligned with frames
};

// Loads and cross-validates every file the manifest names. Frames may be
// listed in any order; they are sorted by id and duplicate ids rejected.
Scene load_scene(const fs::path& manifest_path);

struct GroundingQuery {
    std::string scene_id;
    std::string text;
    geometry::Box3 gt_box;
    std::string subset;
};

// Tab-separated: scene id, query, six comma-separated box bounds, subset.
// Lines starting with '#' are comments.
void write_queries(const fs::path& path, std::span<const GroundingQuery> queries);
std::vector<GroundingQuery> read_queries(const fs::path& path);

// Lists every labeled point of the scene GT with its class index.
std::vector<labeling::LabeledPoint> gt_labeled_points(const GroundTruth& gt);
std::vector<labeling::GtInstance> gt_instances(const GroundTruth& gt);

// Binary PPM (P6) for synthetic RGB frames.
void write_ppm(const fs::path& path, int width, int height, std::span<const std::uint8_t> rgb);

}  // namespace ovseg::dataset
