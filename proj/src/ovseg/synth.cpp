#include "ovseg/synth.hpp"

#include "ovseg/error.hpp"
#include "ovseg/gateway.hpp"
#include "ovseg/labeling_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace ovseg::synth {

namespace fs = std::filesystem;
using geometry::Pose;

geometry::Box3 Primitive::bounds() const {
    const Vec3 h = kind == Kind::Box ? half_extent : Vec3::Constant(radius);
    return {center - h, center + h};
}

std::optional<double> Primitive::intersect(const Vec3& origin, const Vec3& dir) const {
    if (kind == Kind::Sphere) {
        const Vec3 o = origin - center;
        const double a = dir.squaredNorm();
        const double b = 2.0 * o.dot(dir);
        const double c = o.squaredNorm() - radius * radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return std::nullopt;
        const double s = std::sqrt(disc);
        if (const double t = (-b - s) / (2.0 * a); t > 0.0) return t;
        if (const double t = (-b + s) / (2.0 * a); t > 0.0) return t;
        return std::nullopt;
    }
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    const Vec3 lo = center - half_extent, hi = center + half_extent;
    for (int k = 0; k < 3; ++k) {
        if (dir(k) == 0.0) {
            if (origin(k) < lo(k) || origin(k) > hi(k)) return std::nullopt;
            continue;
        }
        double t0 = (lo(k) - origin(k)) / dir(k);
        double t1 = (hi(k) - origin(k)) / dir(k);
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
    }
    if (t_near > t_far) return std::nullopt;
    if (t_near > 0.0) return t_near;
    if (t_far > 0.0) return t_far;
    return std::nullopt;
}

Vec3 Primitive::normal_at(const Vec3& point) const {
    if (kind == Kind::Sphere) return (point - center).normalized();
    const Vec3 rel = (point - center).cwiseQuotient(half_extent);
    int axis = 0;
    rel.cwiseAbs().maxCoeff(&axis);
    Vec3 n = Vec3::Zero();
    n(axis) = rel(axis) < 0.0 ? -1.0 : 1.0;
    return n;
}

void SynthSceneSpec::validate() const {
    require(room_extent > 0.0, ErrorCode::InvalidArgument, "synth: room extent must be positive");
    require(!objects.empty(), ErrorCode::InvalidArgument, "synth: need at least one object");
    require(cameras.size() >= 2, ErrorCode::InvalidArgument, "synth: need at least two cameras");
    require(depth_sigma >= 0.0, ErrorCode::InvalidArgument, "synth: negative depth noise");
    require(grazing_cos >= 0.0 && grazing_cos < 1.0, ErrorCode::InvalidArgument, "synth: grazing_cos must lie in [0, 1)");
    require(mask_dropout >= 0.0 && mask_dropout < 1.0, ErrorCode::InvalidArgument, "synth: dropout must lie in [0, 1)");
    require(embedding_dim >= 2, ErrorCode::InvalidArgument, "synth: embedding dimension too small");
    intrinsics.validate();
    for (const auto& o : objects) {
        require(!o.class_name.empty() && o.class_name != background_class, ErrorCode::InvalidArgument,
                "synth: object class must be a non-background name");
        if (o.kind == Primitive::Kind::Box) {
            require((o.half_extent.array() > 0.0).all(), ErrorCode::InvalidArgument, "synth: degenerate box");
        } else {
            require(o.radius > 0.0, ErrorCode::InvalidArgument, "synth: degenerate sphere");
        }
    }
    for (const auto& c : cameras) c.validate();
}

RenderedFrame render(const SynthSceneSpec& spec, const Pose& pose) {
    const auto& k = spec.intrinsics;
    RenderedFrame out{geometry::DepthImage(k.width, k.height),
                      {k.width, k.height, std::vector<std::int32_t>(static_cast<std::size_t>(k.width) * k.height, -1)}};
    for (int v = 0; v < k.height; ++v) {
        for (int u = 0; u < k.width; ++u) {
            // With a unit z component the ray parameter equals the z-depth.
            const Vec3 ray_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
            const Vec3 dir = pose.rotation * ray_cam;
            double best = std::numeric_limits<double>::infinity();
            std::int32_t id = -1;
            for (std::size_t i = 0; i < spec.objects.size(); ++i) {
                if (const auto t = spec.objects[i].intersect(pose.translation, dir); t && *t < best) {
                    best = *t;
                    id = static_cast<std::int32_t>(i);
                }
            }
            if (id >= 0 && spec.grazing_cos > 0.0) {
                const Vec3 n = spec.objects[static_cast<std::size_t>(id)].normal_at(pose.translation + best * dir);
                if (std::abs(n.dot(dir.normalized())) < spec.grazing_cos) id = -1;
            }
            if (id >= 0) {
                out.depth.at(u, v) = static_cast<float>(best);
                out.instances.ids[static_cast<std::size_t>(v) * k.width + u] = id;
            }
        }
    }
    return out;
}

namespace {

constexpr double kPi = std::numbers::pi;

struct Placement {
    double lo_x, hi_x, lo_y, hi_y;
};

bool footprint_clear(const Primitive& p, const std::vector<Primitive>& placed, double gap) {
    const auto b = p.bounds();
    for (const auto& q : placed) {
        const auto c = q.bounds();
        const bool apart = b.min_corner.x() > c.max_corner.x() + gap || c.min_corner.x() > b.max_corner.x() + gap ||
                           b.min_corner.y() > c.max_corner.y() + gap || c.min_corner.y() > b.max_corner.y() + gap;
        if (!apart) return false;
    }
    return true;
}

std::vector<Pose> arc_cameras(std::size_t n, double center_azimuth, double arc, double radius, double height) {
    std::vector<Pose> cams;
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = center_azimuth + arc * (static_cast<double>(i) / static_cast<double>(n - 1) - 0.5);
        const Vec3 eye(radius * std::cos(phi), radius * std::sin(phi), height);
        cams.push_back(Pose::look_at(eye, Vec3(0.0, 0.0, 0.3)));
    }
    return cams;
}

// Every object fully in frame with a margin, at least min_visible_px pixels
// seen, and at most max_hidden of its projection covered by other objects.
bool layout_ok(const SynthSceneSpec& spec, std::size_t min_visible_px, double max_hidden) {
    const auto& k = spec.intrinsics;
    for (const auto& pose : spec.cameras) {
        geometry::Frame frame{0, geometry::DepthImage(), k, pose, std::nullopt};
        for (const auto& obj : spec.objects) {
            const auto b = obj.bounds();
            for (int corner = 0; corner < 8; ++corner) {
                const Vec3 p((corner & 1) ? b.max_corner.x() : b.min_corner.x(),
                             (corner & 2) ? b.max_corner.y() : b.min_corner.y(),
                             (corner & 4) ? b.max_corner.z() : b.min_corner.z());
                if (pose.to_camera(p).z() <= 0.1) return false;
                const auto proj = geometry::project(p, frame);
                if (proj.pixel.x() < 4 || proj.pixel.y() < 4 || proj.pixel.x() > k.width - 5 ||
                    proj.pixel.y() > k.height - 5) {
                    return false;
                }
            }
        }
        std::vector<std::size_t> visible(spec.objects.size(), 0), hidden(spec.objects.size(), 0);
        for (int v = 0; v < k.height; ++v) {
            for (int u = 0; u < k.width; ++u) {
                const Vec3 dir = pose.rotation * Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
                double best = std::numeric_limits<double>::infinity();
                std::optional<std::size_t> front;
                std::vector<std::size_t> hits;
                for (std::size_t i = 0; i < spec.objects.size(); ++i) {
                    const auto t = spec.objects[i].intersect(pose.translation, dir);
                    if (!t) continue;
                    hits.push_back(i);
                    if (*t < best) {
                        best = *t;
                        front = i;
                    }
                }
                for (auto i : hits) ++(i == front ? visible : hidden)[i];
            }
        }
        for (std::size_t i = 0; i < spec.objects.size(); ++i) {
            if (visible[i] < min_visible_px) return false;
            if (static_cast<double>(hidden[i]) > max_hidden * static_cast<double>(visible[i] + hidden[i])) return false;
        }
    }
    return true;
}

// Every box face keeps one status over the whole trajectory: seen well above
// the grazing cutoff from every camera, or clearly below it from every camera.
// A face that turns from dropped to seen mid-arc makes later views cover a
// patch the earlier union lacks, and the fused object can split.
bool faces_consistent(const SynthSceneSpec& spec, double margin) {
    for (const auto& obj : spec.objects) {
        if (obj.kind != Primitive::Kind::Box) continue;
        for (int axis = 0; axis < 3; ++axis) {
            for (double sign : {-1.0, 1.0}) {
                Vec3 n = Vec3::Zero();
                n[axis] = sign;
                const Vec3 center = obj.center + sign * obj.half_extent[axis] * n;
                int status = 0;
                for (const auto& pose : spec.cameras) {
                    const double c = n.dot((pose.translation - center).normalized());
                    const int s = c > spec.grazing_cos + margin ? 1 : c < spec.grazing_cos - margin ? -1 : 0;
                    if (s == 0 || (status != 0 && s != status)) return false;
                    status = s;
                }
            }
        }
    }
    return true;
}

struct ClassShape {
    const char* name;
    Primitive::Kind kind;
};

constexpr ClassShape kClasses[] = {
    {"chair", Primitive::Kind::Box},   {"table", Primitive::Kind::Box}, {"cabinet", Primitive::Kind::Box},
    {"ottoman", Primitive::Kind::Box}, {"ball", Primitive::Kind::Sphere}, {"globe", Primitive::Kind::Sphere},
};

Primitive random_primitive(std::mt19937_64& rng, const Placement& area) {
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kClasses) - 1);
    std::uniform_real_distribution<double> ux(area.lo_x, area.hi_x), uy(area.lo_y, area.hi_y);
    std::uniform_real_distribution<double> half(0.15, 0.35), tall(0.15, 0.4), rad(0.15, 0.3);
    const auto& cls = kClasses[pick(rng)];
    Primitive p;
    p.kind = cls.kind;
    p.class_name = cls.name;
    if (p.kind == Primitive::Kind::Box) {
        p.half_extent = {half(rng), half(rng), tall(rng)};
        p.center = {ux(rng), uy(rng), p.half_extent.z()};
    } else {
        p.radius = rad(rng);
        p.center = {ux(rng), uy(rng), p.radius};
    }
    return p;
}

// Rotation of the layout about z by quarter turns keeps boxes axis-aligned.
Primitive rotate_quarter(Primitive p, int quarters) {
    for (int q = 0; q < quarters; ++q) {
        p.center = {-p.center.y(), p.center.x(), p.center.z()};
        p.half_extent = {p.half_extent.y(), p.half_extent.x(), p.half_extent.z()};
        if (p.front_yaw) p.front_yaw = std::fmod(*p.front_yaw + kPi / 2.0, 2.0 * kPi);
    }
    return p;
}

}  // namespace

SynthSceneSpec random_scene(std::uint64_t seed, const RandomSceneOptions& options) {
    require(options.n_objects >= 1, ErrorCode::InvalidArgument, "synth: need at least one object");
    require(options.n_frames >= 2, ErrorCode::InvalidArgument, "synth: need at least two frames");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> quadrant(0, 3);
    std::uniform_real_distribution<double> jitter(-5.0 * kPi / 180.0, 5.0 * kPi / 180.0);
    for (int attempt = 0; attempt < 2000; ++attempt) {
        SynthSceneSpec spec;
        spec.scene_id = "synth_" + std::to_string(seed);
        spec.seed = seed;
        const Placement area{-1.4, 1.4, -1.4, 1.4};
        for (std::size_t i = 0; i < options.n_objects; ++i) {
            for (int tries = 0; tries < 100; ++tries) {
                auto p = random_primitive(rng, area);
                if (footprint_clear(p, spec.objects, 0.35)) {
                    spec.objects.push_back(std::move(p));
                    break;
                }
            }
        }
        if (spec.objects.size() != options.n_objects) continue;
        // Diagonal viewing keeps two side faces of every box well lit by the
        // arc, so no face flips between visible and grazing across frames.
        const double phi0 = kPi / 4.0 + quadrant(rng) * kPi / 2.0 + jitter(rng);
        for (double radius = 4.5; radius <= 8.0; radius += 0.5) {
            spec.cameras = arc_cameras(options.n_frames, phi0, options.arc_deg * kPi / 180.0, radius, 3.0);
            if (faces_consistent(spec, 0.1) && layout_ok(spec, 150, 0.02)) return spec;
        }
    }
    fail(ErrorCode::Degenerate, "synth: no valid layout found for seed " + std::to_string(seed));
}

SynthSceneSpec grounding_scene(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int quarters = static_cast<int>(seed % 4);
    for (int attempt = 0; attempt < 500; ++attempt) {
        // Built with the cameras on the +x side, then turned by quarters.
        std::vector<Primitive> objs;
        Primitive cabinet;
        cabinet.class_name = "cabinet";
        cabinet.half_extent = {0.25, 0.5, 0.6};
        cabinet.center = {-1.3, 0.0, 0.6};
        cabinet.front_yaw = 0.0;
        objs.push_back(cabinet);

        const Placement area{-0.5, 1.3, -1.5, 1.5};
        std::uniform_real_distribution<double> ux(area.lo_x, area.hi_x), uy(area.lo_y, area.hi_y);
        auto place = [&](Primitive p) {
            for (int tries = 0; tries < 100; ++tries) {
                p.center.x() = ux(rng);
                p.center.y() = uy(rng);
                if (footprint_clear(p, objs, 0.35)) {
                    objs.push_back(p);
                    return true;
                }
            }
            return false;
        };
        Primitive chair;
        chair.class_name = "chair";
        chair.half_extent = {0.22, 0.22, 0.25};
        chair.center.z() = 0.25;
        Primitive table;
        table.class_name = "table";
        table.half_extent = {0.4, 0.3, 0.2};
        table.center.z() = 0.2;
        Primitive ball;
        ball.kind = Primitive::Kind::Sphere;
        ball.class_name = "ball";
        ball.radius = 0.2;
        ball.center.z() = 0.2;
        if (!place(chair) || !place(chair) || !place(chair) || !place(table) || !place(ball)) continue;

        SynthSceneSpec spec;
        spec.scene_id = "ground_" + std::to_string(seed);
        spec.seed = seed;
        for (auto& p : objs) spec.objects.push_back(rotate_quarter(p, quarters));
        spec.cameras = arc_cameras(8, quarters * kPi / 2.0, 100.0 * kPi / 180.0, 5.0, 3.0);
        if (!layout_ok(spec, 150, 1.0)) continue;
        if (templated_queries(spec).size() < 2) continue;
        return spec;
    }
    fail(ErrorCode::Degenerate, "synth: no valid grounding layout for seed " + std::to_string(seed));
}

std::vector<dataset::GroundingQuery> templated_queries(const SynthSceneSpec& spec) {
    constexpr double kMargin = 0.3;
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < spec.objects.size(); ++i) by_class[spec.objects[i].class_name].push_back(i);

    std::vector<dataset::GroundingQuery> out;
    // Index of the unique maximum of score over `group`, if it wins by kMargin.
    auto clear_max = [&](const std::vector<std::size_t>& group, auto score) -> std::optional<std::size_t> {
        std::vector<std::pair<double, std::size_t>> s;
        for (auto i : group) s.emplace_back(score(i), i);
        std::sort(s.begin(), s.end(), std::greater<>());
        if (s.size() < 2 || s[0].first - s[1].first < kMargin) return std::nullopt;
        return s[0].second;
    };
    for (const auto& [main, group] : by_class) {
        if (group.size() < 2) continue;
        for (const auto& [ref_name, refs] : by_class) {
            if (refs.size() != 1 || ref_name == main) continue;
            const auto& ref = spec.objects[refs.front()];
            const Vec3 rc = ref.bounds().center();
            auto dist = [&](std::size_t i) { return (spec.objects[i].bounds().center() - rc).norm(); };
            auto add = [&](std::optional<std::size_t> hit, std::string text, std::string subset) {
                if (hit) out.push_back({spec.scene_id, std::move(text), spec.objects[*hit].bounds(), std::move(subset)});
            };
            add(clear_max(group, [&](std::size_t i) { return -dist(i); }), "the " + main + " closest to the " + ref_name, "near");
            add(clear_max(group, dist), "the " + main + " farthest from the " + ref_name, "far");
            if (ref.front_yaw) {
                // A viewer facing the reference looks along -front; their left is z x (-front).
                const Vec3 left(std::sin(*ref.front_yaw), -std::cos(*ref.front_yaw), 0.0);
                auto side = [&](std::size_t i) { return (spec.objects[i].bounds().center() - rc).dot(left); };
                add(clear_max(group, side), "facing the " + ref_name + ", the " + main + " on the left", "view");
                add(clear_max(group, [&](std::size_t i) { return -side(i); }),
                    "facing the " + ref_name + ", the " + main + " on the right", "view");
            }
        }
    }
    return out;
}

namespace {

std::array<std::uint8_t, 3> class_color(const std::string& name) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : name) h = (h ^ c) * 16777619u;
    return {static_cast<std::uint8_t>(64 + (h & 0x7F)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0x7F)),
            static_cast<std::uint8_t>(64 + ((h >> 16) & 0x7F))};
}

std::string frame_stem(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frames/%06zu", i);
    return buf;
}

std::vector<masks::Mask2D> subdivide(std::uint32_t frame, int w, int h, std::uint32_t level,
                                     const std::vector<masks::PixelCoord>& pixels, int splits_x, int splits_y) {
    int x0 = w, y0 = h, x1 = 0, y1 = 0;
    for (const auto& p : pixels) {
        x0 = std::min(x0, p.u);
        y0 = std::min(y0, p.v);
        x1 = std::max(x1, p.u + 1);
        y1 = std::max(y1, p.v + 1);
    }
    std::vector<std::vector<masks::PixelCoord>> cells(static_cast<std::size_t>(splits_x * splits_y));
    for (const auto& p : pixels) {
        const int cx = std::min(splits_x - 1, (p.u - x0) * splits_x / std::max(1, x1 - x0));
        const int cy = std::min(splits_y - 1, (p.v - y0) * splits_y / std::max(1, y1 - y0));
        cells[static_cast<std::size_t>(cy * splits_x + cx)].push_back(p);
    }
    std::vector<masks::Mask2D> out;
    for (const auto& c : cells) {
        if (!c.empty()) out.push_back(masks::Mask2D::from_pixels(frame, w, h, level, c));
    }
    return out;
}

}  // namespace

fs::path write_scene(const SynthSceneSpec& spec, const fs::path& out_dir) {
    spec.validate();
    fs::create_directories(out_dir / "frames");
    fs::create_directories(out_dir / "gt");
    const auto& k = spec.intrinsics;

    std::set<std::string> class_set;
    for (const auto& o : spec.objects) class_set.insert(o.class_name);
    dataset::GroundTruth gt;
    gt.classes.assign(class_set.begin(), class_set.end());
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        const auto& o = spec.objects[i];
        const auto cls = static_cast<std::size_t>(std::find(gt.classes.begin(), gt.classes.end(), o.class_name) - gt.classes.begin());
        gt.instances.push_back({static_cast<std::uint32_t>(i), cls, o.bounds(), o.front_yaw});
    }

    auto embed = [&](const std::string& name) {
        return gateway::MockGateway::hashed_embedding(spec.embedding_dim, spec.embedding_seed,
                                                      labeling::format_prompt(spec.prompt_template, name));
    };
    const auto background = embed(spec.background_class);
    std::map<std::string, embedding::Embedding> class_embedding;
    for (const auto& c : gt.classes) class_embedding[c] = embed(c);

    std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ull);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    dataset::Manifest manifest;
    manifest.scene_id = spec.scene_id;
    manifest.intrinsics = k;
    manifest.depth_scale = spec.depth_scale;
    manifest.masks = "masks.ovmk";
    manifest.embeddings = "embeddings.ovem";
    manifest.annotations = "gt/annotations.json";
    manifest.gt_points = "gt/points.ovgt";

    std::vector<masks::Mask2D> all_masks;
    std::vector<dataset::CropEmbeddings> all_embeddings;
    for (std::size_t f = 0; f < spec.cameras.size(); ++f) {
        const auto& pose = spec.cameras[f];
        auto rendered = render(spec, pose);
        if (spec.depth_sigma > 0.0) {
            for (int v = 0; v < k.height; ++v) {
                for (int u = 0; u < k.width; ++u) {
                    float& d = rendered.depth.at(u, v);
                    if (d > 0.0f) d = static_cast<float>(std::max(0.001, d + spec.depth_sigma * noise(rng)));
                }
            }
        }
        const std::string stem = frame_stem(f);
        dataset::FrameEntry entry{static_cast<std::uint32_t>(f), stem + ".depth", stem + ".pose", stem + ".ppm",
                                  stem + ".inst"};
        dataset::write_depth(out_dir / entry.depth, rendered.depth, spec.depth_scale);
        dataset::write_pose(out_dir / entry.pose, pose);
        // Ground truth is taken from the depth exactly as a loader will see it.
        const geometry::Frame frame{entry.id, dataset::read_depth(out_dir / entry.depth, spec.depth_scale), k, pose,
                                    std::nullopt};
        auto& inst = rendered.instances;
        std::vector<std::uint8_t> rgb(static_cast<std::size_t>(k.width) * k.height * 3, 40);
        std::vector<std::vector<masks::PixelCoord>> pixels(spec.objects.size());
        for (int v = 0; v < k.height; ++v) {
            for (int u = 0; u < k.width; ++u) {
                auto& id = inst.ids[static_cast<std::size_t>(v) * k.width + u];
                if (id < 0) continue;
                if (!frame.depth.valid(u, v)) {
                    id = -1;
                    continue;
                }
                const auto obj = static_cast<std::size_t>(id);
                pixels[obj].push_back({u, v});
                gt.points.push_back({geometry::back_project({u, v}, frame), static_cast<std::uint32_t>(id)});
                const auto color = class_color(spec.objects[obj].class_name);
                const double shade = std::clamp(1.3 - 0.08 * frame.depth.at(u, v), 0.3, 1.0);
                for (int c = 0; c < 3; ++c) {
                    rgb[(static_cast<std::size_t>(v) * k.width + u) * 3 + c] = static_cast<std::uint8_t>(color[c] * shade);
                }
            }
        }
        dataset::write_instance_map(out_dir / *entry.instances, inst);
        dataset::write_ppm(out_dir / *entry.rgb, k.width, k.height, rgb);

        std::vector<bool> present(spec.objects.size());
        for (std::size_t i = 0; i < spec.objects.size(); ++i) {
            present[i] = !pixels[i].empty() && !(spec.mask_dropout > 0.0 && unit(rng) < spec.mask_dropout);
        }
        // Level 0 whole objects, level 1 halves, level 2 quadrants.
        const int grid[3][2] = {{1, 1}, {2, 1}, {2, 2}};
        for (std::uint32_t level = 0; level < 3; ++level) {
            for (std::size_t i = 0; i < spec.objects.size(); ++i) {
                if (!present[i]) continue;
                int sx = grid[level][0], sy = grid[level][1];
                if (level == 1) {
                    // Halve along the longer side of the object's image box.
                    const auto box = masks::Mask2D::from_pixels(entry.id, k.width, k.height, 0, pixels[i]).bbox();
                    if (box.height() > box.width()) std::swap(sx, sy);
                }
                for (auto& m : subdivide(entry.id, k.width, k.height, level, pixels[i], sx, sy)) {
                    const auto& e = class_embedding.at(spec.objects[i].class_name);
                    all_masks.push_back(std::move(m));
                    all_embeddings.push_back({e, e, e, e, background});
                }
            }
        }
        manifest.frames.push_back(std::move(entry));
    }

    dataset::write_masks(out_dir / manifest.masks, all_masks);
    dataset::write_embeddings(out_dir / manifest.embeddings, all_embeddings);
    dataset::write_annotations(out_dir / *manifest.annotations, gt);
    dataset::write_gt_points(out_dir / *manifest.gt_points, gt.points);
    dataset::write_queries(out_dir / "queries.tsv", templated_queries(spec));
    const auto manifest_path = out_dir / "manifest.json";
    dataset::write_manifest(manifest_path, manifest);
    return manifest_path;
}

}  // namespace ovseg::synth
