#pragma once

#include "ovseg/mask.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ovseg::masks {

// Masks larger than this are clustered on a stride-2 pixel lattice.
inline constexpr std::size_t kSubsampleArea = 50'000;

struct GranularitySchedule {
    std::vector<double> levels;      // granularity values, coarse to fine
    std::vector<double> thresholds;  // overlap threshold per level
    std::size_t min_area = 1;
    int margin_px = 1;
    double dbscan_eps_px = 3.0;
    std::size_t dbscan_min_pts = 8;

    // Three levels; min_area is 0.05% of the image.
    static GranularitySchedule defaults(int width, int height);
    void validate() const;
};

// |m ∩ other| / |m|. Asymmetric: the denominator is always `m`.
double overlap_ratio(const Mask2D& m, const Mask2D& other);

struct SelectedMask {
    std::size_t level = 0;
    std::size_t index = 0;  // position within its level's input list
};

// Processing order inside one level: descending area, then first raster
// pixel, then input position.
std::vector<std::size_t> level_order(std::span<const Mask2D> masks);

// Walks the levels coarse to fine and keeps a mask only when its overlap
// ratio against every mask kept so far (coarser levels and earlier masks of
// its own level) stays below that level's threshold.
std::vector<SelectedMask> progressive_select_indices(const std::vector<std::vector<Mask2D>>& levels,
                                                     const GranularitySchedule& schedule);
std::vector<Mask2D> progressive_select(const std::vector<std::vector<Mask2D>>& levels,
                                       const GranularitySchedule& schedule);

bool is_small_or_marginal(const Mask2D& mask, std::size_t min_area, int margin_px);
std::vector<Mask2D> filter_small(std::span<const Mask2D> masks, std::size_t min_area, int margin_px);

// DBSCAN over pixel coordinates; one mask per cluster, largest first. Noise
// pixels are dropped. Throws Degenerate when every pixel is noise.
std::vector<Mask2D> split_fragments_2d(const Mask2D& mask, double eps_px, std::size_t min_pts);

struct RefinedMask {
    Mask2D mask;
    std::size_t source = 0;      // index into the frame's raw mask list
    std::uint32_t fragment = 0;  // cluster index from split_fragments_2d
};

// Full per-frame refinement: progressive selection, small/marginal filter,
// then pixel-space DBSCAN. Output is ordered by (source, fragment).
std::vector<RefinedMask> refine_frame(std::span<const Mask2D> raw, const GranularitySchedule& schedule);

}  // namespace ovseg::masks
