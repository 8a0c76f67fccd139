#include "ovseg/fusion.hpp"

#include "ovseg/dbscan.hpp"
#include "ovseg/error.hpp"
#include "ovseg/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace ovseg::fusion {

std::vector<MaskRef> Object3D::source_masks() const {
    std::vector<MaskRef> refs;
    refs.reserve(members.size());
    for (const auto& m : members) refs.push_back(m.ref);
    return refs;
}

void FusionParams::validate() const {
    require(gamma > 0.0 && gamma <= 1.0, ErrorCode::InvalidArgument, "fusion: gamma must be in (0, 1]");
    require(delta >= 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "fusion: delta must be in [0, 1]");
    require(voxel_size > 0.0, ErrorCode::InvalidArgument, "fusion: voxel size must be positive");
    require(dbscan_eps_m > 0.0 && dbscan_min_pts >= 1, ErrorCode::InvalidArgument,
            "fusion: invalid DBSCAN parameters");
}

namespace {

struct Lifted {
    std::vector<Vec3> points;
    std::vector<masks::PixelCoord> pixels;
};

Lifted lift_with_pixels(const masks::Mask2D& mask, const geometry::Frame& frame) {
    require(mask.frame_id() == frame.id, ErrorCode::FrameMismatch,
            "lift_mask: mask of frame " + std::to_string(mask.frame_id()) + " applied to frame " +
                std::to_string(frame.id));
    require(mask.width() == frame.depth.width() && mask.height() == frame.depth.height(), ErrorCode::SizeMismatch,
            "lift_mask: mask and depth dimensions differ");
    Lifted out;
    out.points.reserve(mask.area());
    for (const auto& p : mask.pixels()) {
        if (!frame.depth.valid(p.u, p.v)) continue;
        out.points.push_back(geometry::back_project({p.u, p.v}, frame));
        out.pixels.push_back(p);
    }
    if (out.points.empty()) {
        fail(ErrorCode::AllInvalidDepth,
             "lift_mask: no pixel of the mask has valid depth in frame " + std::to_string(frame.id));
    }
    return out;
}

// Cluster labels for split_3d plus the cluster order (largest first).
std::pair<clustering::DbscanResult, std::vector<int>> cluster_3d(std::span<const Vec3> points,
                                                                 const FusionParams& params) {
    require(!points.empty(), ErrorCode::EmptyInput, "split_3d: no points");
    auto result = clustering::dbscan<3>(points, params.dbscan_eps_m, params.dbscan_min_pts);
    if (result.cluster_count == 0) fail(ErrorCode::AllNoise, "split_3d: every point is noise");
    std::vector<std::size_t> sizes(static_cast<std::size_t>(result.cluster_count), 0);
    for (int l : result.labels) {
        if (l != clustering::kNoise) ++sizes[static_cast<std::size_t>(l)];
    }
    std::vector<int> order(static_cast<std::size_t>(result.cluster_count));
    for (int c = 0; c < result.cluster_count; ++c) order[static_cast<std::size_t>(c)] = c;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)];
    });
    return {std::move(result), std::move(order)};
}

embedding::Embedding mean_embedding(const std::vector<Member>& members) {
    std::size_t dim = 0;
    for (const auto& m : members) dim = std::max(dim, m.embedding.size());
    require(dim > 0, ErrorCode::DimMismatch, "merge_objects: members carry no embeddings");
    std::vector<double> acc(dim, 0.0);
    for (const auto& m : members) {
        require(m.embedding.size() == dim, ErrorCode::DimMismatch, "merge_objects: embedding dimensions differ");
        for (std::size_t i = 0; i < dim; ++i) acc[i] += m.embedding[i];
    }
    const double n = static_cast<double>(members.size());
    double sq = 0.0;
    for (double& x : acc) {
        x /= n;
        sq += x * x;
    }
    const double norm = std::sqrt(sq);
    require(norm >= 1e-12, ErrorCode::ZeroNorm, "merge_objects: member embeddings cancel out");
    embedding::Embedding out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

}  // namespace

std::vector<Vec3> lift_mask(const masks::Mask2D& mask, const geometry::Frame& frame) {
    return lift_with_pixels(mask, frame).points;
}

bool merge_criterion(double iov_ab, double iov_ba, double gamma, double delta) {
    return iov_ab > gamma && iov_ba > gamma && std::abs(iov_ab - iov_ba) < delta;
}

bool try_merge(const Object3D& a, const Object3D& b, const FusionParams& params) {
    const auto iov = geometry::voxel_iov(a.voxels, b.voxels);
    return merge_criterion(iov.ab, iov.ba, params.gamma, params.delta);
}

Object3D make_object(MaskRef ref, std::vector<Vec3> points, embedding::Embedding embedding, double voxel_size) {
    require(!points.empty(), ErrorCode::EmptyInput, "object: no points");
    Object3D obj;
    obj.voxels = geometry::voxelize(points, voxel_size);
    obj.members.push_back({ref, embedding, static_cast<std::uint32_t>(points.size())});
    obj.embedding = std::move(embedding);
    obj.points = std::move(points);
    return obj;
}

Object3D merge_objects(std::span<const Object3D> objs) {
    require(!objs.empty(), ErrorCode::EmptyInput, "merge_objects: no objects");
    if (objs.size() == 1) return objs.front();

    struct Slice {
        const Member* member;
        const Vec3* first;
    };
    std::vector<Slice> slices;
    for (const auto& o : objs) {
        std::size_t offset = 0;
        for (const auto& m : o.members) {
            require(offset + m.point_count <= o.points.size(), ErrorCode::SizeMismatch,
                    "merge_objects: member point counts exceed the object's points");
            slices.push_back({&m, o.points.data() + offset});
            offset += m.point_count;
        }
    }
    std::stable_sort(slices.begin(), slices.end(),
                     [](const Slice& a, const Slice& b) { return a.member->ref < b.member->ref; });

    Object3D merged;
    merged.id = objs.front().id;
    for (const auto& s : slices) {
        merged.members.push_back(*s.member);
        merged.points.insert(merged.points.end(), s.first, s.first + s.member->point_count);
    }
    merged.voxels = geometry::voxelize(merged.points, objs.front().voxels.voxel_size());
    merged.embedding = mean_embedding(merged.members);
    return merged;
}

std::vector<std::vector<Vec3>> split_3d(std::span<const Vec3> points, const FusionParams& params) {
    const auto [result, order] = cluster_3d(points, params);
    std::vector<std::vector<Vec3>> clusters(order.size());
    std::vector<std::size_t> slot(order.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) slot[static_cast<std::size_t>(order[rank])] = rank;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int l = result.labels[i];
        if (l != clustering::kNoise) clusters[slot[static_cast<std::size_t>(l)]].push_back(points[i]);
    }
    return clusters;
}

std::vector<Object3D> merge_to_fixpoint(std::vector<Object3D> objects, const FusionParams& params,
                                        std::size_t* merges) {
    std::stable_sort(objects.begin(), objects.end(), [](const Object3D& a, const Object3D& b) {
        return a.members.front().ref < b.members.front().ref;
    });
    // rejected[i][j] (i < j) caches a failed test between two unchanged objects.
    std::vector<std::vector<char>> rejected(objects.size(), std::vector<char>(objects.size(), 0));
    std::size_t merge_count = 0;
    bool merged_any = true;
    while (merged_any) {
        merged_any = false;
        for (std::size_t i = 0; i < objects.size() && !merged_any; ++i) {
            for (std::size_t j = i + 1; j < objects.size(); ++j) {
                if (rejected[i][j]) continue;
                if (!try_merge(objects[i], objects[j], params)) {
                    rejected[i][j] = 1;
                    continue;
                }
                const std::array<Object3D, 2> pair{std::move(objects[i]), std::move(objects[j])};
                objects[i] = merge_objects(pair);
                objects.erase(objects.begin() + static_cast<std::ptrdiff_t>(j));
                rejected.erase(rejected.begin() + static_cast<std::ptrdiff_t>(j));
                for (auto& row : rejected) row.erase(row.begin() + static_cast<std::ptrdiff_t>(j));
                for (std::size_t k = 0; k < objects.size(); ++k) rejected[i][k] = rejected[k][i] = 0;
                ++merge_count;
                merged_any = true;
                break;
            }
        }
    }
    for (std::size_t i = 0; i < objects.size(); ++i) objects[i].id = static_cast<std::uint32_t>(i);
    if (merges) *merges = merge_count;
    return objects;
}

FusionResult fuse_scene(std::span<const geometry::Frame> frames,
                        std::span<const std::vector<MaskObservation>> per_frame, const FusionParams& params,
                        const ReembedHook& reembed) {
    params.validate();
    require(frames.size() == per_frame.size(), ErrorCode::CountMismatch,
            "fuse_scene: " + std::to_string(frames.size()) + " frames but " + std::to_string(per_frame.size()) +
                " observation lists");

    struct Task {
        const geometry::Frame* frame;
        const MaskObservation* obs;
    };
    std::vector<Task> tasks;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        for (const auto& obs : per_frame[f]) {
            require(obs.mask.frame_id() == frames[f].id && obs.ref.frame_id == frames[f].id,
                    ErrorCode::FrameMismatch,
                    "fuse_scene: observation for frame " + std::to_string(obs.ref.frame_id) +
                        " listed under frame " + std::to_string(frames[f].id));
            tasks.push_back({&frames[f], &obs});
        }
    }
    std::stable_sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) { return a.obs->ref < b.obs->ref; });

    struct TaskOutput {
        std::vector<Object3D> candidates;
        std::size_t lifted = 0;
        std::size_t noise = 0;
        bool invalid_depth = false;
        bool all_noise = false;
    };
    std::vector<TaskOutput> outputs(tasks.size());

    parallel_for(tasks.size(), params.workers, [&](std::size_t t) {
        const auto& task = tasks[t];
        auto& out = outputs[t];
        Lifted lifted;
        try {
            lifted = lift_with_pixels(task.obs->mask, *task.frame);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AllInvalidDepth) throw;
            out.invalid_depth = true;
            return;
        }
        out.lifted = lifted.points.size();
        std::pair<clustering::DbscanResult, std::vector<int>> clustered;
        try {
            clustered = cluster_3d(lifted.points, params);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AllNoise) throw;
            out.all_noise = true;
            out.noise = lifted.points.size();
            return;
        }
        const auto& [result, order] = clustered;
        const bool split = order.size() > 1;
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            std::vector<Vec3> pts;
            std::vector<masks::PixelCoord> pix;
            for (std::size_t i = 0; i < lifted.points.size(); ++i) {
                if (result.labels[i] == order[rank]) {
                    pts.push_back(lifted.points[i]);
                    pix.push_back(lifted.pixels[i]);
                }
            }
            embedding::Embedding emb = task.obs->embedding;
            if (split && reembed) {
                const auto cluster_mask = masks::Mask2D::from_pixels(task.obs->mask.frame_id(), task.obs->mask.width(),
                                                                     task.obs->mask.height(), task.obs->mask.level(),
                                                                     pix);
                if (auto fresh = reembed(cluster_mask, *task.obs)) emb = std::move(*fresh);
            }
            MaskRef ref = task.obs->ref;
            ref.part = static_cast<std::uint32_t>(rank);
            out.candidates.push_back(make_object(ref, std::move(pts), std::move(emb), params.voxel_size));
        }
        for (int l : result.labels) {
            if (l == clustering::kNoise) ++out.noise;
        }
    });

    FusionResult fused;
    std::vector<Object3D> candidates;
    for (auto& out : outputs) {
        fused.stats.lifted_points += out.lifted;
        fused.stats.noise_points += out.noise;
        fused.stats.invalid_depth_masks += out.invalid_depth ? 1 : 0;
        fused.stats.all_noise_masks += out.all_noise ? 1 : 0;
        for (auto& c : out.candidates) candidates.push_back(std::move(c));
    }
    fused.stats.candidates = candidates.size();
    fused.objects = merge_to_fixpoint(std::move(candidates), params, &fused.stats.merges);
    return fused;
}

}  // namespace ovseg::fusion
