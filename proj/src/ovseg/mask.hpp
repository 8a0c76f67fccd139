#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ovseg::masks {

// Horizontal run over the row-major raster index of an image.
struct Run {
    std::uint32_t start = 0;
    std::uint32_t length = 0;

    bool operator==(const Run&) const = default;
};

struct PixelCoord {
    int u = 0;
    int v = 0;

    bool operator==(const PixelCoord&) const = default;
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool contains(const PixelRect& other) const {
        return x0 <= other.x0 && y0 <= other.y0 && x1 >= other.x1 && y1 >= other.y1;
    }
    bool operator==(const PixelRect&) const = default;
};

// Binary image region stored as sorted, non-adjacent runs. Two masks over the
// same pixels always have identical run lists.
class Mask2D {
public:
    Mask2D(std::uint32_t frame_id, int width, int height, std::uint32_t level, std::vector<Run> runs);

    static Mask2D from_pixels(std::uint32_t frame_id, int width, int height, std::uint32_t level,
                              std::span<const PixelCoord> pixels);
    static Mask2D from_bitmap(std::uint32_t frame_id, int width, int height, std::uint32_t level,
                              std::span<const std::uint8_t> bitmap);

    std::uint32_t frame_id() const { return frame_id_; }
    int width() const { return width_; }
    int height() const { return height_; }
    std::uint32_t level() const { return level_; }
    std::size_t area() const { return area_; }
    const std::vector<Run>& runs() const { return runs_; }

    std::uint32_t first_index() const { return runs_.front().start; }
    PixelRect bbox() const;
    bool contains(int u, int v) const;

    // Pixels in raster order.
    std::vector<PixelCoord> pixels() const;
    std::vector<std::uint8_t> to_bitmap() const;

    bool operator==(const Mask2D&) const = default;

private:
    std::uint32_t frame_id_ = 0;
    int width_ = 0;
    int height_ = 0;
    std::uint32_t level_ = 0;
    std::vector<Run> runs_;
    std::size_t area_ = 0;
};

std::size_t intersection_area(const Mask2D& a, const Mask2D& b);

}  // namespace ovseg::masks
