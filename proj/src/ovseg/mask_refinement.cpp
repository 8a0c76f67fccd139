#include "ovseg/mask_refinement.hpp"

#include "ovseg/dbscan.hpp"
#include "ovseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ovseg::masks {

GranularitySchedule GranularitySchedule::defaults(int width, int height) {
    GranularitySchedule s;
    s.levels = {1.0, 2.0, 3.0};
    s.thresholds = {1.0, 0.3, 0.5};
    const double pixels = static_cast<double>(width) * static_cast<double>(height);
    s.min_area = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(pixels * 0.0005)));
    return s;
}

void GranularitySchedule::validate() const {
    require(levels.size() == thresholds.size(), ErrorCode::ScheduleMismatch,
            "schedule: " + std::to_string(levels.size()) + " levels but " + std::to_string(thresholds.size()) +
                " thresholds");
    require(!levels.empty(), ErrorCode::ScheduleMismatch, "schedule: no levels");
    for (std::size_t k = 1; k < levels.size(); ++k) {
        require(levels[k] > levels[k - 1], ErrorCode::InvalidArgument,
                "schedule: granularity levels must be strictly increasing");
    }
    for (double t : thresholds) {
        require(t >= 0.0 && t <= 1.0, ErrorCode::InvalidArgument, "schedule: threshold outside [0, 1]");
    }
    require(min_area >= 1, ErrorCode::InvalidArgument, "schedule: min_area must be at least 1");
    require(margin_px >= 0, ErrorCode::InvalidArgument, "schedule: negative margin");
    require(dbscan_eps_px > 0.0 && dbscan_min_pts >= 1, ErrorCode::InvalidArgument,
            "schedule: invalid DBSCAN parameters");
}

double overlap_ratio(const Mask2D& m, const Mask2D& other) {
    require(m.frame_id() == other.frame_id() && m.width() == other.width() && m.height() == other.height(),
            ErrorCode::FrameMismatch, "overlap_ratio: masks belong to different frames");
    return static_cast<double>(intersection_area(m, other)) / static_cast<double>(m.area());
}

std::vector<std::size_t> level_order(std::span<const Mask2D> masks) {
    std::vector<std::size_t> order(masks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (masks[a].area() != masks[b].area()) return masks[a].area() > masks[b].area();
        return masks[a].first_index() < masks[b].first_index();
    });
    return order;
}

std::vector<SelectedMask> progressive_select_indices(const std::vector<std::vector<Mask2D>>& levels,
                                                     const GranularitySchedule& schedule) {
    require(levels.size() == schedule.thresholds.size(), ErrorCode::ScheduleMismatch,
            "progressive_select: " + std::to_string(levels.size()) + " mask levels but " +
                std::to_string(schedule.thresholds.size()) + " thresholds");
    std::vector<SelectedMask> kept;
    std::vector<const Mask2D*> kept_masks;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const double tau = schedule.thresholds[k];
        for (std::size_t idx : level_order(levels[k])) {
            const Mask2D& candidate = levels[k][idx];
            double worst = 0.0;
            for (const Mask2D* prior : kept_masks) {
                worst = std::max(worst, overlap_ratio(candidate, *prior));
                if (worst >= tau) break;
            }
            if (kept_masks.empty() || worst < tau) {
                kept.push_back({k, idx});
                kept_masks.push_back(&candidate);
            }
        }
    }
    return kept;
}

std::vector<Mask2D> progressive_select(const std::vector<std::vector<Mask2D>>& levels,
                                       const GranularitySchedule& schedule) {
    std::vector<Mask2D> out;
    for (const auto& sel : progressive_select_indices(levels, schedule)) out.push_back(levels[sel.level][sel.index]);
    return out;
}

bool is_small_or_marginal(const Mask2D& mask, std::size_t min_area, int margin_px) {
    if (mask.area() < min_area) return true;
    const PixelRect box = mask.bbox();
    return box.x0 < margin_px || box.y0 < margin_px || box.x1 > mask.width() - margin_px ||
           box.y1 > mask.height() - margin_px;
}

std::vector<Mask2D> filter_small(std::span<const Mask2D> masks, std::size_t min_area, int margin_px) {
    require(min_area >= 1, ErrorCode::InvalidArgument, "filter_small: min_area must be at least 1");
    std::vector<Mask2D> out;
    for (const auto& m : masks) {
        if (!is_small_or_marginal(m, min_area, margin_px)) out.push_back(m);
    }
    return out;
}

namespace {

using Point2 = Eigen::Vector2d;

std::vector<Point2> to_points(std::span<const PixelCoord> pixels) {
    std::vector<Point2> pts;
    pts.reserve(pixels.size());
    for (const auto& p : pixels) pts.emplace_back(p.u, p.v);
    return pts;
}

// Cluster a stride-2 lattice of the mask, then give every pixel the label of
// its lattice anchor, or of the nearest labelled lattice pixel within eps.
std::vector<int> subsampled_labels(const Mask2D& mask, std::span<const PixelCoord> pixels, double eps_px,
                                   std::size_t min_pts, int& cluster_count) {
    std::vector<PixelCoord> lattice;
    for (const auto& p : pixels) {
        if (p.u % 2 == 0 && p.v % 2 == 0) lattice.push_back(p);
    }
    const auto lattice_pts = to_points(lattice);
    const std::size_t lattice_min = std::max<std::size_t>(1, (min_pts + 3) / 4);
    const auto result = clustering::dbscan<2>(lattice_pts, eps_px, lattice_min);
    cluster_count = result.cluster_count;

    std::vector<int> anchor_label(static_cast<std::size_t>(mask.width()) * mask.height(), clustering::kNoise);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        anchor_label[static_cast<std::size_t>(lattice[i].v) * mask.width() + lattice[i].u] = result.labels[i];
    }
    const clustering::HashGrid<2> grid(lattice_pts, eps_px);
    std::vector<std::size_t> near;
    std::vector<int> labels(pixels.size(), clustering::kNoise);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const auto& p = pixels[i];
        const int au = p.u & ~1, av = p.v & ~1;
        const int anchored = anchor_label[static_cast<std::size_t>(av) * mask.width() + au];
        if (anchored != clustering::kNoise) {
            labels[i] = anchored;
            continue;
        }
        const Point2 q(p.u, p.v);
        grid.radius_query(q, eps_px, near);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t n : near) {
            if (result.labels[n] == clustering::kNoise) continue;
            const double d = (lattice_pts[n] - q).squaredNorm();
            if (d < best) {
                best = d;
                labels[i] = result.labels[n];
            }
        }
    }
    return labels;
}

}  // namespace

std::vector<Mask2D> split_fragments_2d(const Mask2D& mask, double eps_px, std::size_t min_pts) {
    require(eps_px > 0.0 && min_pts >= 1, ErrorCode::InvalidArgument, "split_fragments_2d: invalid parameters");
    const auto pixels = mask.pixels();
    std::vector<int> labels;
    int cluster_count = 0;
    if (pixels.size() > kSubsampleArea) {
        labels = subsampled_labels(mask, pixels, eps_px, min_pts, cluster_count);
    } else {
        const auto pts = to_points(pixels);
        auto result = clustering::dbscan<2>(pts, eps_px, min_pts);
        labels = std::move(result.labels);
        cluster_count = result.cluster_count;
    }

    std::vector<std::vector<PixelCoord>> clusters(static_cast<std::size_t>(cluster_count));
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (labels[i] != clustering::kNoise) clusters[static_cast<std::size_t>(labels[i])].push_back(pixels[i]);
    }
    std::erase_if(clusters, [](const auto& c) { return c.empty(); });
    if (clusters.empty()) {
        fail(ErrorCode::Degenerate, "split_fragments_2d: every pixel of the mask is noise");
    }
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    std::vector<Mask2D> out;
    out.reserve(clusters.size());
    for (const auto& c : clusters) {
        out.push_back(Mask2D::from_pixels(mask.frame_id(), mask.width(), mask.height(), mask.level(), c));
    }
    return out;
}

std::vector<RefinedMask> refine_frame(std::span<const Mask2D> raw, const GranularitySchedule& schedule) {
    schedule.validate();
    std::vector<std::vector<Mask2D>> levels(schedule.levels.size());
    std::vector<std::vector<std::size_t>> sources(schedule.levels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::size_t level = raw[i].level();
        require(level < levels.size(), ErrorCode::ScheduleMismatch,
                "refine_frame: mask level " + std::to_string(level) + " beyond the schedule's " +
                    std::to_string(levels.size()) + " levels");
        levels[level].push_back(raw[i]);
        sources[level].push_back(i);
    }

    std::vector<std::size_t> kept;
    for (const auto& sel : progressive_select_indices(levels, schedule)) {
        const Mask2D& m = levels[sel.level][sel.index];
        if (!is_small_or_marginal(m, schedule.min_area, schedule.margin_px)) kept.push_back(sources[sel.level][sel.index]);
    }
    std::sort(kept.begin(), kept.end());

    std::vector<RefinedMask> out;
    for (std::size_t source : kept) {
        std::vector<Mask2D> fragments;
        try {
            fragments = split_fragments_2d(raw[source], schedule.dbscan_eps_px, schedule.dbscan_min_pts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Degenerate) throw;
            continue;
        }
        for (std::size_t f = 0; f < fragments.size(); ++f) {
            out.push_back({std::move(fragments[f]), source, static_cast<std::uint32_t>(f)});
        }
    }
    return out;
}

}  // namespace ovseg::masks
