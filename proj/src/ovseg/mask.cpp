#include "ovseg/mask.hpp"

#include "ovseg/error.hpp"

#include <algorithm>
#include <climits>

namespace ovseg::masks {

Mask2D::Mask2D(std::uint32_t frame_id, int width, int height, std::uint32_t level, std::vector<Run> runs)
    : frame_id_(frame_id), width_(width), height_(height), level_(level) {
    require(width > 0 && height > 0, ErrorCode::InvalidArgument, "mask: image dimensions must be positive");
    const std::uint64_t total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    std::erase_if(runs, [](const Run& r) { return r.length == 0; });
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.start < b.start; });
    for (const Run& r : runs) {
        require(static_cast<std::uint64_t>(r.start) + r.length <= total, ErrorCode::OutOfBounds,
                "mask: run extends past the image");
        if (!runs_.empty() && r.start <= runs_.back().start + runs_.back().length) {
            Run& last = runs_.back();
            const std::uint32_t end = std::max(last.start + last.length, r.start + r.length);
            last.length = end - last.start;
        } else {
            runs_.push_back(r);
        }
    }
    for (const Run& r : runs_) area_ += r.length;
    require(area_ > 0, ErrorCode::EmptyInput, "mask: no pixels");
}

Mask2D Mask2D::from_pixels(std::uint32_t frame_id, int width, int height, std::uint32_t level,
                           std::span<const PixelCoord> pixels) {
    std::vector<Run> runs;
    runs.reserve(pixels.size());
    for (const auto& p : pixels) {
        require(p.u >= 0 && p.v >= 0 && p.u < width && p.v < height, ErrorCode::OutOfBounds,
                "mask: pixel outside the image");
        runs.push_back({static_cast<std::uint32_t>(p.v) * static_cast<std::uint32_t>(width) +
                            static_cast<std::uint32_t>(p.u),
                        1});
    }
    return Mask2D(frame_id, width, height, level, std::move(runs));
}

Mask2D Mask2D::from_bitmap(std::uint32_t frame_id, int width, int height, std::uint32_t level,
                           std::span<const std::uint8_t> bitmap) {
    require(bitmap.size() == static_cast<std::size_t>(width) * height, ErrorCode::SizeMismatch,
            "mask: bitmap size does not match dimensions");
    std::vector<Run> runs;
    std::size_t i = 0;
    while (i < bitmap.size()) {
        if (!bitmap[i]) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < bitmap.size() && bitmap[i]) ++i;
        runs.push_back({static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(i - start)});
    }
    return Mask2D(frame_id, width, height, level, std::move(runs));
}

PixelRect Mask2D::bbox() const {
    PixelRect box{INT_MAX, INT_MAX, INT_MIN, INT_MIN};
    for (const Run& r : runs_) {
        std::uint32_t idx = r.start;
        const std::uint32_t end = r.start + r.length;
        while (idx < end) {
            const int v = static_cast<int>(idx / width_);
            const int u = static_cast<int>(idx % width_);
            const std::uint32_t row_end = std::min<std::uint32_t>(end, (v + 1) * static_cast<std::uint32_t>(width_));
            const int u_last = u + static_cast<int>(row_end - idx) - 1;
            box.x0 = std::min(box.x0, u);
            box.x1 = std::max(box.x1, u_last + 1);
            box.y0 = std::min(box.y0, v);
            box.y1 = std::max(box.y1, v + 1);
            idx = row_end;
        }
    }
    return box;
}

bool Mask2D::contains(int u, int v) const {
    if (u < 0 || v < 0 || u >= width_ || v >= height_) return false;
    const std::uint32_t idx = static_cast<std::uint32_t>(v) * width_ + u;
    auto it = std::upper_bound(runs_.begin(), runs_.end(), idx,
                               [](std::uint32_t value, const Run& r) { return value < r.start; });
    if (it == runs_.begin()) return false;
    --it;
    return idx < it->start + it->length;
}

std::vector<PixelCoord> Mask2D::pixels() const {
    std::vector<PixelCoord> out;
    out.reserve(area_);
    for (const Run& r : runs_) {
        for (std::uint32_t idx = r.start; idx < r.start + r.length; ++idx) {
            out.push_back({static_cast<int>(idx % width_), static_cast<int>(idx / width_)});
        }
    }
    return out;
}

std::vector<std::uint8_t> Mask2D::to_bitmap() const {
    std::vector<std::uint8_t> bitmap(static_cast<std::size_t>(width_) * height_, 0);
    for (const Run& r : runs_) std::fill_n(bitmap.begin() + r.start, r.length, std::uint8_t{1});
    return bitmap;
}

std::size_t intersection_area(const Mask2D& a, const Mask2D& b) {
    const auto& ra = a.runs();
    const auto& rb = b.runs();
    std::size_t shared = 0;
    std::size_t i = 0, j = 0;
    while (i < ra.size() && j < rb.size()) {
        const std::uint32_t a_end = ra[i].start + ra[i].length;
        const std::uint32_t b_end = rb[j].start + rb[j].length;
        const std::uint32_t lo = std::max(ra[i].start, rb[j].start);
        const std::uint32_t hi = std::min(a_end, b_end);
        if (hi > lo) shared += hi - lo;
        if (a_end < b_end) {
            ++i;
        } else {
            ++j;
        }
    }
    return shared;
}

}  // namespace ovseg::masks
