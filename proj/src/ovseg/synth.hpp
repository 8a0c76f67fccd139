#pragma once

#include "ovseg/dataset_io.hpp"
#include "ovseg/geometry.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Analytic test scenes: axis-aligned boxes and spheres seen by pinhole
// cameras, rendered by ray casting and written in the standard formats.
namespace ovseg::synth {

using geometry::Vec3;

struct Primitive {
    enum class Kind { Box, Sphere };

    Kind kind = Kind::Box;
    std::string class_name;
    Vec3 center = Vec3::Zero();
    Vec3 half_extent = Vec3::Constant(0.25);  // boxes
    double radius = 0.25;                     // spheres
    std::optional<double> front_yaw;

    geometry::Box3 bounds() const;
    // Ray parameter of the first hit along origin + t * dir, t > 0.
    std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const;
    // Outward unit normal at a surface point.
    Vec3 normal_at(const Vec3& point) const;
};

struct SynthSceneSpec {
    std::string scene_id = "synth";
    std::uint64_t seed = 0;
    double room_extent = 4.0;
    std::vector<Primitive> objects;
    std::vector<geometry::Pose> cameras;
    geometry::Intrinsics intrinsics{280.0, 280.0, 159.5, 119.5, 320, 240};
    double depth_scale = 1000.0;
    double depth_sigma = 0.0;   // meters, Gaussian
    // Like a real sensor, no depth where |cos| between ray and surface normal
    // falls below this. 0 keeps every hit.
    double grazing_cos = 0.25;
    double mask_dropout = 0.0;  // probability of omitting an object's masks in a frame
    std::size_t embedding_dim = 512;
    std::uint64_t embedding_seed = 0;
    std::string prompt_template = "a photo of {}.";
    std::string background_class = "background";

    void validate() const;
};

struct RandomSceneOptions {
    std::size_t n_objects = 4;
    std::size_t n_frames = 6;
    double arc_deg = 40.0;  // azimuth span of the camera trajectory
};

// Non-overlapping primitives on the floor, cameras on an elevated arc around
// a diagonal direction, every object fully inside every image and hardly
// hidden by the others.
SynthSceneSpec random_scene(std::uint64_t seed, const RandomSceneOptions& options = {});

// Three chairs plus a cabinet facing the cameras and two distractors; the
// layout used for templated grounding queries.
SynthSceneSpec grounding_scene(std::uint64_t seed);

struct RenderedFrame {
    geometry::DepthImage depth;  // meters before quantization
    dataset::InstanceMap instances;
};

RenderedFrame render(const SynthSceneSpec& spec, const geometry::Pose& pose);

// Templated queries whose answer is unambiguous by a clear margin:
// "the X closest to the Y", "the X farthest from the Y", and
// "facing the Y, the X on the left/right".
std::vector<dataset::GroundingQuery> templated_queries(const SynthSceneSpec& spec);

// Writes the scene under `out_dir` and returns the manifest path. Same spec,
// same bytes.
std::filesystem::path write_scene(const SynthSceneSpec& spec, const std::filesystem::path& out_dir);

}  // namespace ovseg::synth
