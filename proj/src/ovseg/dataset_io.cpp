#include "ovseg/dataset_io.hpp"

#include "ovseg/binary_io.hpp"
#include "ovseg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ovseg::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, path.string() + ": cannot open for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::Io, path.string() + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace ovseg::io

namespace ovseg::dataset {

using nlohmann::json;

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

[[noreturn]] void text_error(const fs::path& path, std::size_t offset, const std::string& what) {
    fail(ErrorCode::Format, path.string() + ": offset " + std::to_string(offset) + ": " + what);
}

json parse_json_file(const fs::path& path) {
    const std::string text = io::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        text_error(path, e.byte > 0 ? e.byte - 1 : 0, "invalid JSON");
    }
}

template <class T>
T json_get(const json& node, const char* key, const fs::path& path) {
    if (!node.is_object() || !node.contains(key)) fail(ErrorCode::Format, path.string() + ": missing field '" + key + "'");
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::Format, path.string() + ": field '" + std::string(key) + "' has the wrong type");
    }
}

fs::path resolve(const fs::path& manifest, const std::string& rel) { return manifest.parent_path() / rel; }

}  // namespace

// ---------------------------------------------------------------------------
// Depth

std::string encode_depth(const geometry::DepthImage& depth, double depth_scale) {
    require(depth_scale > 0.0, ErrorCode::InvalidArgument, "depth: scale must be positive");
    io::ByteWriter w;
    w.magic("OVDP");
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(depth.width()));
    w.u32(static_cast<std::uint32_t>(depth.height()));
    w.f64(depth_scale);
    for (float m : depth.data()) {
        if (!geometry::is_valid_depth(m)) {
            w.u16(0);
            continue;
        }
        const double units = std::round(static_cast<double>(m) * depth_scale);
        require(units <= 65535.0, ErrorCode::InvalidDepth, "depth: " + format_number(m) + " m exceeds the 16-bit range");
        w.u16(static_cast<std::uint16_t>(units));
    }
    return w.take();
}

void write_depth(const fs::path& path, const geometry::DepthImage& depth, double depth_scale) {
    io::write_file(path, encode_depth(depth, depth_scale));
}

geometry::DepthImage read_depth(const fs::path& path, double expected_scale) {
    auto r = io::ByteReader::open(path);
    r.header("OVDP", kFormatVersion);
    const std::size_t dims_at = r.offset();
    const auto w = r.u32(), h = r.u32();
    if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) r.fail_at(dims_at, "implausible image size");
    const std::size_t scale_at = r.offset();
    const double scale = r.f64();
    if (!(scale > 0.0)) r.fail_at(scale_at, "non-positive depth scale");
    if (expected_scale > 0.0 && scale != expected_scale) {
        r.fail_at(scale_at, "depth scale " + format_number(scale) + " differs from manifest " + format_number(expected_scale));
    }
    std::vector<float> meters(static_cast<std::size_t>(w) * h);
    for (auto& m : meters) {
        const std::uint16_t units = r.u16();
        m = units == 0 ? 0.0f : static_cast<float>(units / scale);
    }
    r.expect_end();
    return {static_cast<int>(w), static_cast<int>(h), std::move(meters)};
}

// ---------------------------------------------------------------------------
// Pose

void write_pose(const fs::path& path, const geometry::Pose& pose) {
    std::string text;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            double v;
            if (r == 3) {
                v = c == 3 ? 1.0 : 0.0;
            } else {
                v = c < 3 ? pose.rotation(r, c) : pose.translation(r);
            }
            text += format_number(v);
            text += c < 3 ? ' ' : '\n';
        }
    }
    io::write_file(path, text);
}

geometry::Pose read_pose(const fs::path& path) {
    const std::string text = io::read_file(path);
    double m[16];
    std::size_t pos = 0;
    for (int i = 0; i < 16; ++i) {
        pos = text.find_first_not_of(" \t\r\n", pos);
        if (pos == std::string::npos) text_error(path, text.size(), "expected 16 numbers, found " + std::to_string(i));
        const auto [end, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), m[i]);
        if (ec != std::errc{}) text_error(path, pos, "not a number");
        pos = static_cast<std::size_t>(end - text.data());
    }
    if (text.find_first_not_of(" \t\r\n", pos) != std::string::npos) text_error(path, pos, "trailing content");
    if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0) {
        text_error(path, 0, "last row must be 0 0 0 1");
    }
    geometry::Pose pose;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.rotation(r, c) = m[4 * r + c];
        pose.translation(r) = m[4 * r + 3];
    }
    try {
        pose.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Format, path.string() + ": " + e.what());
    }
    return pose;
}

// ---------------------------------------------------------------------------
// Masks

void write_masks(const fs::path& path, std::span<const masks::Mask2D> list) {
    io::ByteWriter w;
    w.magic("OVMK");
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const auto& m : list) {
        w.u32(m.frame_id());
        w.u32(m.level());
        w.u32(static_cast<std::uint32_t>(m.width()));
        w.u32(static_cast<std::uint32_t>(m.height()));
        w.u32(static_cast<std::uint32_t>(m.runs().size()));
        for (const auto& run : m.runs()) {
            w.u32(run.start);
            w.u32(run.length);
        }
    }
    io::write_file(path, w.bytes());
}

std::vector<masks::Mask2D> read_masks(const fs::path& path) {
    auto r = io::ByteReader::open(path);
    r.header("OVMK", kFormatVersion);
    const auto count = r.u32();
    std::vector<masks::Mask2D> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        const auto frame = r.u32(), level = r.u32(), w = r.u32(), h = r.u32(), n = r.u32();
        if (n > r.remaining() / 8) r.fail_at(at, "run count " + std::to_string(n) + " exceeds file size");
        std::vector<masks::Run> runs(n);
        std::uint64_t prev_end = 0;
        for (auto& run : runs) {
            const std::size_t run_at = r.offset();
            run.start = r.u32();
            run.length = r.u32();
            // Stored runs are canonical: sorted, non-empty, not touching.
            if (run.length == 0 || (&run != runs.data() && run.start <= prev_end)) {
                r.fail_at(run_at, "runs are not canonical");
            }
            prev_end = static_cast<std::uint64_t>(run.start) + run.length;
        }
        try {
            out.emplace_back(frame, static_cast<int>(w), static_cast<int>(h), level, std::move(runs));
        } catch (const Error& e) {
            r.fail_at(at, std::string("mask record ") + std::to_string(i) + ": " + e.what());
        }
    }
    r.expect_end();
    return out;
}

// ---------------------------------------------------------------------------
// Embeddings

void write_embeddings(const fs::path& path, std::span<const CropEmbeddings> records) {
    const std::size_t dim = records.empty() ? 0 : records.front()[0].size();
    io::ByteWriter w;
    w.magic("OVEM");
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u32(static_cast<std::uint32_t>(records.size()));
    for (auto kind : embedding::kCropOrder) w.u8(static_cast<std::uint8_t>(kind));
    w.pad_to(8);
    for (const auto& rec : records) {
        for (const auto& e : rec) {
            require(e.size() == dim, ErrorCode::DimMismatch, "embeddings: mixed dimensions in one archive");
            for (float v : e) w.f32(v);
        }
    }
    io::write_file(path, w.bytes());
}

std::vector<CropEmbeddings> read_embeddings(const fs::path& path) {
    auto r = io::ByteReader::open(path);
    r.header("OVEM", kFormatVersion);
    const std::size_t dim_at = r.offset();
    const auto dim = r.u32();
    const auto count = r.u32();
    if (dim == 0 && count > 0) r.fail_at(dim_at, "zero dimension");
    for (auto kind : embedding::kCropOrder) {
        const std::size_t at = r.offset();
        if (r.u8() != static_cast<std::uint8_t>(kind)) r.fail_at(at, "crop order differs from the canonical order");
    }
    r.skip_padding(8);
    if (static_cast<std::uint64_t>(count) * embedding::kCropCount * dim * 4 != r.remaining()) {
        r.fail_at(r.offset(), "payload size does not match " + std::to_string(count) + " records of dimension " +
                                  std::to_string(dim));
    }
    std::vector<CropEmbeddings> out(count);
    for (auto& rec : out) {
        for (auto& e : rec) {
            e.resize(dim);
            const std::size_t at = r.offset();
            for (auto& v : e) {
                v = r.f32();
                if (!std::isfinite(v)) r.fail_at(at, "non-finite embedding value");
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Object maps

std::string encode_object_map(const ObjectMap& map) {
    const std::size_t dim = map.objects.empty() ? 0 : map.objects.front().embedding.size();
    io::ByteWriter w;
    w.magic("OVOM");
    w.u32(kFormatVersion);
    w.str(map.scene_id);
    w.str(map.config_hash);
    w.f64(map.voxel_size);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u32(static_cast<std::uint32_t>(map.objects.size()));
    for (const auto& obj : map.objects) {
        require(obj.embedding.size() == dim, ErrorCode::DimMismatch, "object map: mixed embedding dimensions");
        w.u32(obj.id);
        w.u32(obj.merged_count());
        w.u32(static_cast<std::uint32_t>(obj.points.size()));
        for (const auto& p : obj.points) {
            w.f32(static_cast<float>(p.x()));
            w.f32(static_cast<float>(p.y()));
            w.f32(static_cast<float>(p.z()));
        }
        for (float v : obj.embedding) w.f32(v);
        for (const auto& m : obj.members) {
            w.u32(m.ref.frame_id);
            w.u32(m.ref.mask_index);
            w.u32(m.ref.fragment);
            w.u32(m.ref.part);
            w.u32(m.point_count);
        }
    }
    return w.take();
}

void write_object_map(const fs::path& path, const ObjectMap& map) { io::write_file(path, encode_object_map(map)); }

ObjectMap read_object_map(const fs::path& path) {
    auto r = io::ByteReader::open(path);
    r.header("OVOM", kFormatVersion);
    ObjectMap map;
    map.scene_id = r.str();
    map.config_hash = r.str();
    const std::size_t vs_at = r.offset();
    map.voxel_size = r.f64();
    if (!(map.voxel_size > 0.0)) r.fail_at(vs_at, "non-positive voxel size");
    const auto dim = r.u32();
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        fusion::Object3D obj;
        obj.id = r.u32();
        const auto n_members = r.u32();
        const auto n_points = r.u32();
        if (n_points == 0) r.fail_at(at, "object without points");
        if (static_cast<std::uint64_t>(n_points) * 12 > r.remaining()) r.fail_at(at, "point count exceeds file size");
        obj.points.resize(n_points);
        for (auto& p : obj.points) {
            const float x = r.f32(), y = r.f32(), z = r.f32();
            p = {x, y, z};
        }
        obj.embedding.resize(dim);
        for (auto& v : obj.embedding) v = r.f32();
        std::uint64_t member_points = 0;
        for (std::uint32_t k = 0; k < n_members; ++k) {
            fusion::Member m;
            m.ref.frame_id = r.u32();
            m.ref.mask_index = r.u32();
            m.ref.fragment = r.u32();
            m.ref.part = r.u32();
            m.point_count = r.u32();
            member_points += m.point_count;
            obj.members.push_back(std::move(m));
        }
        if (member_points != n_points) r.fail_at(at, "member point counts do not sum to the object's points");
        obj.voxels = geometry::voxelize(obj.points, map.voxel_size);
        map.objects.push_back(std::move(obj));
    }
    r.expect_end();
    return map;
}

// ---------------------------------------------------------------------------
// Ground truth

const GtObject* GroundTruth::find(std::uint32_t id) const {
    for (const auto& g : instances) {
        if (g.id == id) return &g;
    }
    return nullptr;
}

void write_annotations(const fs::path& path, const GroundTruth& gt) {
    json instances = json::array();
    for (const auto& g : gt.instances) {
        const auto& b = g.box;
        json item{{"id", g.id},
                  {"class", gt.classes.at(g.class_index)},
                  {"box", {b.min_corner.x(), b.min_corner.y(), b.min_corner.z(), b.max_corner.x(), b.max_corner.y(),
                           b.max_corner.z()}}};
        item["front_yaw"] = g.front_yaw ? json(*g.front_yaw) : json(nullptr);
        instances.push_back(item);
    }
    io::write_file(path, json{{"classes", gt.classes}, {"instances", instances}}.dump(2) + "\n");
}

void read_annotations(const fs::path& path, GroundTruth& gt) {
    const json doc = parse_json_file(path);
    gt.classes = json_get<std::vector<std::string>>(doc, "classes", path);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < gt.classes.size(); ++i) {
        if (!index.emplace(gt.classes[i], i).second) fail(ErrorCode::Format, path.string() + ": duplicate class '" + gt.classes[i] + "'");
    }
    gt.instances.clear();
    std::set<std::uint32_t> ids;
    for (const auto& item : json_get<json>(doc, "instances", path)) {
        GtObject g;
        g.id = json_get<std::uint32_t>(item, "id", path);
        if (!ids.insert(g.id).second) fail(ErrorCode::Format, path.string() + ": duplicate instance id " + std::to_string(g.id));
        const auto cls = json_get<std::string>(item, "class", path);
        const auto it = index.find(cls);
        if (it == index.end()) fail(ErrorCode::Format, path.string() + ": unknown class '" + cls + "'");
        g.class_index = it->second;
        const auto box = json_get<std::vector<double>>(item, "box", path);
        if (box.size() != 6) fail(ErrorCode::Format, path.string() + ": box needs 6 numbers");
        g.box = {{box[0], box[1], box[2]}, {box[3], box[4], box[5]}};
        try {
            g.box.validate();
        } catch (const Error& e) {
            fail(ErrorCode::Format, path.string() + ": instance " + std::to_string(g.id) + ": " + e.what());
        }
        if (item.contains("front_yaw") && !item["front_yaw"].is_null()) g.front_yaw = json_get<double>(item, "front_yaw", path);
        gt.instances.push_back(g);
    }
}

void write_gt_points(const fs::path& path, std::span<const GtPoint> points) {
    io::ByteWriter w;
    w.magic("OVGT");
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(points.size()));
    for (const auto& p : points) {
        w.f64(p.point.x());
        w.f64(p.point.y());
        w.f64(p.point.z());
        w.u32(p.instance);
    }
    io::write_file(path, w.bytes());
}

std::vector<GtPoint> read_gt_points(const fs::path& path) {
    auto r = io::ByteReader::open(path);
    r.header("OVGT", kFormatVersion);
    const auto count = r.u32();
    if (static_cast<std::uint64_t>(count) * 28 != r.remaining()) r.fail_at(r.offset(), "payload size does not match point count");
    std::vector<GtPoint> out(count);
    for (auto& p : out) {
        const double x = r.f64(), y = r.f64(), z = r.f64();
        p.point = {x, y, z};
        p.instance = r.u32();
    }
    return out;
}

void write_instance_map(const fs::path& path, const InstanceMap& map) {
    io::ByteWriter w;
    w.magic("OVIM");
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(map.width));
    w.u32(static_cast<std::uint32_t>(map.height));
    for (auto id : map.ids) w.i32(id);
    io::write_file(path, w.bytes());
}

InstanceMap read_instance_map(const fs::path& path) {
    auto r = io::ByteReader::open(path);
    r.header("OVIM", kFormatVersion);
    InstanceMap map;
    map.width = static_cast<int>(r.u32());
    map.height = static_cast<int>(r.u32());
    if (static_cast<std::uint64_t>(map.width) * map.height * 4 != r.remaining()) {
        r.fail_at(r.offset(), "payload size does not match image size");
    }
    map.ids.resize(static_cast<std::size_t>(map.width) * map.height);
    for (auto& id : map.ids) id = r.i32();
    return map;
}

std::vector<labeling::LabeledPoint> gt_labeled_points(const GroundTruth& gt) {
    std::map<std::uint32_t, std::size_t> cls;
    for (const auto& g : gt.instances) cls[g.id] = g.class_index;
    std::vector<labeling::LabeledPoint> out;
    out.reserve(gt.points.size());
    for (const auto& p : gt.points) {
        const auto it = cls.find(p.instance);
        require(it != cls.end(), ErrorCode::Format, "gt points reference unknown instance " + std::to_string(p.instance));
        out.push_back({p.point, it->second});
    }
    return out;
}

std::vector<labeling::GtInstance> gt_instances(const GroundTruth& gt) {
    std::map<std::uint32_t, std::pair<Vec3, std::size_t>> sums;
    for (const auto& p : gt.points) {
        auto& [sum, n] = sums.try_emplace(p.instance, Vec3::Zero(), 0).first->second;
        sum += p.point;
        ++n;
    }
    std::vector<labeling::GtInstance> out;
    for (const auto& g : gt.instances) {
        // Instances without labeled points fall back to their box center.
        const auto it = sums.find(g.id);
        const Vec3 c = it != sums.end() ? Vec3(it->second.first / static_cast<double>(it->second.second)) : g.box.center();
        out.push_back({c, g.class_index});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

void write_manifest(const fs::path& path, const Manifest& m) {
    json frames = json::array();
    for (const auto& f : m.frames) {
        json item{{"id", f.id}, {"depth", f.depth}, {"pose", f.pose}};
        if (f.rgb) item["rgb"] = *f.rgb;
        if (f.instances) item["instances"] = *f.instances;
        frames.push_back(item);
    }
    const auto& k = m.intrinsics;
    json doc{{"format", kManifestFormat},
             {"version", kFormatVersion},
             {"scene_id", m.scene_id},
             {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
             {"depth_scale", m.depth_scale},
             {"stride", m.stride},
             {"frames", frames},
             {"masks", m.masks},
             {"embeddings", m.embeddings}};
    if (m.annotations || m.gt_points) {
        json gt = json::object();
        if (m.annotations) gt["annotations"] = *m.annotations;
        if (m.gt_points) gt["points"] = *m.gt_points;
        doc["gt"] = gt;
    }
    io::write_file(path, doc.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorCode::Io, path.string() + ": manifest not found");
    const json doc = parse_json_file(path);
    if (json_get<std::string>(doc, "format", path) != kManifestFormat) {
        fail(ErrorCode::Format, path.string() + ": not an " + std::string(kManifestFormat) + " manifest");
    }
    if (const auto v = json_get<std::uint32_t>(doc, "version", path); v != kFormatVersion) {
        fail(ErrorCode::Format, path.string() + ": unsupported manifest version " + std::to_string(v));
    }
    Manifest m;
    m.scene_id = json_get<std::string>(doc, "scene_id", path);
    if (m.scene_id.empty()) fail(ErrorCode::Format, path.string() + ": empty scene_id");
    const json k = json_get<json>(doc, "intrinsics", path);
    m.intrinsics = {json_get<double>(k, "fx", path), json_get<double>(k, "fy", path), json_get<double>(k, "cx", path),
                    json_get<double>(k, "cy", path), json_get<int>(k, "width", path), json_get<int>(k, "height", path)};
    try {
        m.intrinsics.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Format, path.string() + ": " + e.what());
    }
    m.depth_scale = json_get<double>(doc, "depth_scale", path);
    m.stride = doc.contains("stride") ? json_get<int>(doc, "stride", path) : 1;
    if (!(m.depth_scale > 0.0) || m.stride < 1) fail(ErrorCode::Format, path.string() + ": bad depth_scale or stride");
    for (const auto& item : json_get<json>(doc, "frames", path)) {
        FrameEntry f;
        f.id = json_get<std::uint32_t>(item, "id", path);
        f.depth = json_get<std::string>(item, "depth", path);
        f.pose = json_get<std::string>(item, "pose", path);
        if (item.contains("rgb")) f.rgb = json_get<std::string>(item, "rgb", path);
        if (item.contains("instances")) f.instances = json_get<std::string>(item, "instances", path);
        m.frames.push_back(std::move(f));
    }
    m.masks = json_get<std::string>(doc, "masks", path);
    m.embeddings = json_get<std::string>(doc, "embeddings", path);
    if (doc.contains("gt")) {
        const json& gt = doc["gt"];
        if (gt.contains("annotations")) m.annotations = json_get<std::string>(gt, "annotations", path);
        if (gt.contains("points")) m.gt_points = json_get<std::string>(gt, "points", path);
    }
    return m;
}

Scene load_scene(const fs::path& manifest_path) {
    Scene scene;
    scene.manifest_path = manifest_path;
    scene.manifest = read_manifest(manifest_path);
    auto& m = scene.manifest;

    std::stable_sort(m.frames.begin(), m.frames.end(), [](const FrameEntry& a, const FrameEntry& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < m.frames.size(); ++i) {
        if (m.frames[i].id == m.frames[i - 1].id) {
            fail(ErrorCode::Format, manifest_path.string() + ": duplicate frame id " + std::to_string(m.frames[i].id));
        }
    }
    require(!m.frames.empty(), ErrorCode::Format, manifest_path.string() + ": no frames");

    std::map<std::uint32_t, std::size_t> slot;
    for (const auto& entry : m.frames) {
        geometry::Frame f;
        f.id = entry.id;
        f.intrinsics = m.intrinsics;
        const auto depth_path = resolve(manifest_path, entry.depth);
        f.depth = read_depth(depth_path, m.depth_scale);
        if (f.depth.width() != m.intrinsics.width || f.depth.height() != m.intrinsics.height) {
            fail(ErrorCode::SizeMismatch, depth_path.string() + ": depth size differs from the intrinsics");
        }
        f.pose = read_pose(resolve(manifest_path, entry.pose));
        if (entry.rgb) {
            const auto rgb = resolve(manifest_path, *entry.rgb);
            if (!fs::exists(rgb)) fail(ErrorCode::Io, rgb.string() + ": file not found");
            f.rgb_path = rgb.string();
        }
        std::optional<InstanceMap> inst;
        if (entry.instances) {
            const auto p = resolve(manifest_path, *entry.instances);
            inst = read_instance_map(p);
            if (inst->width != f.depth.width() || inst->height != f.depth.height()) {
                fail(ErrorCode::SizeMismatch, p.string() + ": instance map size differs from the depth map");
            }
        }
        slot[f.id] = scene.frames.size();
        scene.frames.push_back(std::move(f));
        scene.instance_maps.push_back(std::move(inst));
    }

    const auto masks_path = resolve(manifest_path, m.masks);
    const auto emb_path = resolve(manifest_path, m.embeddings);
    auto all_masks = read_masks(masks_path);
    auto all_embs = read_embeddings(emb_path);
    if (all_masks.size() != all_embs.size()) {
        fail(ErrorCode::CountMismatch, emb_path.string() + " holds " + std::to_string(all_embs.size()) +
                                           " embedding records but " + masks_path.string() + " holds " +
                                           std::to_string(all_masks.size()) + " masks");
    }
    scene.raw_masks.resize(scene.frames.size());
    scene.crop_embeddings.resize(scene.frames.size());
    for (std::size_t i = 0; i < all_masks.size(); ++i) {
        auto& mask = all_masks[i];
        const auto it = slot.find(mask.frame_id());
        if (it == slot.end()) {
            fail(ErrorCode::FrameMismatch, masks_path.string() + ": mask record " + std::to_string(i) +
                                               " refers to unknown frame " + std::to_string(mask.frame_id()));
        }
        if (mask.width() != m.intrinsics.width || mask.height() != m.intrinsics.height) {
            fail(ErrorCode::SizeMismatch, masks_path.string() + ": mask record " + std::to_string(i) + " has the wrong image size");
        }
        scene.raw_masks[it->second].push_back(std::move(mask));
        scene.crop_embeddings[it->second].push_back(std::move(all_embs[i]));
    }

    if (m.annotations) {
        GroundTruth gt;
        read_annotations(resolve(manifest_path, *m.annotations), gt);
        if (m.gt_points) {
            const auto p = resolve(manifest_path, *m.gt_points);
            gt.points = read_gt_points(p);
            for (const auto& pt : gt.points) {
                if (!gt.find(pt.instance)) {
                    fail(ErrorCode::Format, p.string() + ": point refers to unknown instance " + std::to_string(pt.instance));
                }
            }
        }
        scene.gt = std::move(gt);
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Queries

void write_queries(const fs::path& path, std::span<const GroundingQuery> queries) {
    std::string text = "# scene_id\tquery\tgt_box\tsubset\n";
    for (const auto& q : queries) {
        const auto& b = q.gt_box;
        text += q.scene_id + "\t" + q.text + "\t";
        const double v[6] = {b.min_corner.x(), b.min_corner.y(), b.min_corner.z(),
                             b.max_corner.x(), b.max_corner.y(), b.max_corner.z()};
        for (int i = 0; i < 6; ++i) text += (i ? "," : "") + format_number(v[i]);
        text += "\t" + q.subset + "\n";
    }
    io::write_file(path, text);
}

std::vector<GroundingQuery> read_queries(const fs::path& path) {
    const std::string text = io::read_file(path);
    std::vector<GroundingQuery> out;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        std::string_view line(text.data() + line_start, line_end - line_start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty() && line.front() != '#') {
            std::vector<std::string_view> cols;
            std::size_t p = 0;
            while (true) {
                const auto tab = line.find('\t', p);
                cols.push_back(line.substr(p, tab == std::string_view::npos ? std::string_view::npos : tab - p));
                if (tab == std::string_view::npos) break;
                p = tab + 1;
            }
            if (cols.size() < 3 || cols.size() > 4) text_error(path, line_start, "expected 3 or 4 tab-separated columns");
            GroundingQuery q{std::string(cols[0]), std::string(cols[1]), {}, cols.size() == 4 ? std::string(cols[3]) : ""};
            double v[6];
            std::size_t pos = 0;
            const std::string_view box = cols[2];
            for (int i = 0; i < 6; ++i) {
                const auto [end, ec] = std::from_chars(box.data() + pos, box.data() + box.size(), v[i]);
                if (ec != std::errc{}) text_error(path, line_start, "bad box coordinate");
                pos = static_cast<std::size_t>(end - box.data());
                if (i < 5) {
                    if (pos >= box.size() || box[pos] != ',') text_error(path, line_start, "box needs 6 comma-separated numbers");
                    ++pos;
                }
            }
            if (pos != box.size()) text_error(path, line_start, "trailing box content");
            q.gt_box = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
            out.push_back(std::move(q));
        }
        line_start = line_end + 1;
    }
    return out;
}

void write_ppm(const fs::path& path, int width, int height, std::span<const std::uint8_t> rgb) {
    require(rgb.size() == static_cast<std::size_t>(width) * height * 3, ErrorCode::SizeMismatch, "ppm: wrong buffer size");
    std::string bytes = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    bytes.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    io::write_file(path, bytes);
}

}  // namespace ovseg::dataset
