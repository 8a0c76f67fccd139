#include "ovseg/context_embedding.hpp"

#include "ovseg/error.hpp"

#include <algorithm>
#include <cmath>

namespace ovseg::embedding {

std::string_view to_string(CropKind kind) {
    switch (kind) {
        case CropKind::Mask: return "mask";
        case CropKind::BBox: return "bbox";
        case CropKind::Large: return "large";
        case CropKind::Huge: return "huge";
        case CropKind::Surroundings: return "surroundings";
    }
    return "unknown";
}

masks::PixelRect scale_rect(const masks::PixelRect& rect, double scale) {
    const double cx = 0.5 * (rect.x0 + rect.x1);
    const double cy = 0.5 * (rect.y0 + rect.y1);
    const double hw = 0.5 * rect.width() * scale;
    const double hh = 0.5 * rect.height() * scale;
    return {static_cast<int>(std::floor(cx - hw)), static_cast<int>(std::floor(cy - hh)),
            static_cast<int>(std::ceil(cx + hw)), static_cast<int>(std::ceil(cy + hh))};
}

masks::PixelRect clip_rect(const masks::PixelRect& rect, int width, int height) {
    return {std::clamp(rect.x0, 0, width), std::clamp(rect.y0, 0, height), std::clamp(rect.x1, 0, width),
            std::clamp(rect.y1, 0, height)};
}

std::array<CropSpec, kCropCount> crop_rects(const masks::Mask2D& mask, int width, int height) {
    const masks::PixelRect box = clip_rect(mask.bbox(), width, height);
    require(!box.empty(), ErrorCode::EmptyInput, "crop_rects: mask bounding box is empty");
    return {{
        {CropKind::Mask, box, true, false},
        {CropKind::BBox, box, false, false},
        {CropKind::Large, clip_rect(scale_rect(box, kLargeScale), width, height), false, false},
        {CropKind::Huge, clip_rect(scale_rect(box, kHugeScale), width, height), false, false},
        {CropKind::Surroundings, clip_rect(scale_rect(box, kSurroundingsScale), width, height), false, true},
    }};
}

void EmbeddingWeights::validate() const {
    for (double w : {mask, bbox, large, huge, surroundings}) {
        require(std::isfinite(w), ErrorCode::InvalidArgument, "embedding weights must be finite");
    }
    require(surroundings >= 0.0, ErrorCode::InvalidArgument, "surroundings weight must be non-negative");
}

void normalize(Embedding& v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    const double norm = std::sqrt(sq);
    require(norm >= 1e-12, ErrorCode::ZeroNorm, "cannot normalize a zero vector");
    for (float& x : v) x = static_cast<float>(x / norm);
}

Embedding aggregate_embedding(std::span<const Embedding, kCropCount> per_crop, const EmbeddingWeights& weights) {
    weights.validate();
    const std::size_t dim = per_crop[0].size();
    require(dim > 0, ErrorCode::DimMismatch, "aggregate_embedding: empty crop embedding");
    for (const auto& e : per_crop) {
        require(e.size() == dim, ErrorCode::DimMismatch, "aggregate_embedding: crop embeddings differ in dimension");
        for (float x : e) require(std::isfinite(x), ErrorCode::InvalidArgument, "aggregate_embedding: non-finite input");
    }
    const auto coeff = weights.signed_coefficients();
    std::vector<double> acc(dim, 0.0);
    for (std::size_t c = 0; c < kCropCount; ++c) {
        for (std::size_t i = 0; i < dim; ++i) acc[i] += coeff[c] * per_crop[c][i];
    }
    double sq = 0.0;
    for (double x : acc) sq += x * x;
    const double norm = std::sqrt(sq);
    require(norm >= 1e-12, ErrorCode::ZeroNorm, "aggregate_embedding: weighted combination has zero norm");
    Embedding out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

ContextEmbedding make_context_embedding(std::array<Embedding, kCropCount> per_crop, const EmbeddingWeights& weights) {
    ContextEmbedding ce;
    ce.aggregated = aggregate_embedding(per_crop, weights);
    ce.per_crop = std::move(per_crop);
    return ce;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    require(a.size() == b.size(), ErrorCode::DimMismatch, "cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace ovseg::embedding
