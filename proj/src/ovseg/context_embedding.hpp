#pragma once

#include "ovseg/mask.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace ovseg::embedding {

using Embedding = std::vector<float>;

// Canonical crop order; also the order of vectors in embedding archives.
enum class CropKind : std::uint8_t { Mask = 0, BBox = 1, Large = 2, Huge = 3, Surroundings = 4 };
inline constexpr std::size_t kCropCount = 5;
inline constexpr std::array<CropKind, kCropCount> kCropOrder = {CropKind::Mask, CropKind::BBox, CropKind::Large,
                                                                CropKind::Huge, CropKind::Surroundings};

std::string_view to_string(CropKind kind);

// Expansion factors about the tight box center.
inline constexpr double kLargeScale = 2.5;
inline constexpr double kHugeScale = 4.0;
inline constexpr double kSurroundingsScale = 3.0;

struct CropSpec {
    CropKind kind = CropKind::Mask;
    masks::PixelRect rect;
    bool zero_outside_mask = false;
    bool zero_inside_mask = false;
};

// Scale a half-open rect about its center, rounding outward to whole pixels,
// without clipping. Callers clip against the image.
masks::PixelRect scale_rect(const masks::PixelRect& rect, double scale);
masks::PixelRect clip_rect(const masks::PixelRect& rect, int width, int height);

// Five crops in kCropOrder. Zeroed pixels take value 0 in every channel.
std::array<CropSpec, kCropCount> crop_rects(const masks::Mask2D& mask, int width, int height);

struct EmbeddingWeights {
    double mask = 0.4;
    double bbox = 0.3;
    double large = 0.2;
    double huge = 0.1;
    double surroundings = 0.15;  // subtracted

    void validate() const;
    std::array<double, kCropCount> signed_coefficients() const {
        return {mask, bbox, large, huge, -surroundings};
    }
};

struct ContextEmbedding {
    std::array<Embedding, kCropCount> per_crop;
    Embedding aggregated;

    std::size_t dim() const { return aggregated.size(); }
};

// w_mask e_mask + w_bbox e_bbox + w_large e_large + w_huge e_huge - w_sur e_sur,
// then L2-normalized. Throws ZeroNorm when the combination vanishes.
Embedding aggregate_embedding(std::span<const Embedding, kCropCount> per_crop, const EmbeddingWeights& weights);
ContextEmbedding make_context_embedding(std::array<Embedding, kCropCount> per_crop, const EmbeddingWeights& weights);

// Cosine similarity in double precision.
double cosine(std::span<const float> a, std::span<const float> b);
void normalize(Embedding& v);

}  // namespace ovseg::embedding
