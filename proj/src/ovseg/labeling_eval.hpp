#pragma once

#include "ovseg/context_embedding.hpp"
#include "ovseg/fusion.hpp"
#include "ovseg/geometry.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ovseg::labeling {

using geometry::Vec3;

inline constexpr std::string_view kDefaultPromptTemplate = "a photo of {}.";

struct TextPromptSet {
    std::vector<std::string> classes;
    std::string prompt_template{kDefaultPromptTemplate};
    std::vector<embedding::Embedding> embeddings;

    std::string prompt_for(std::size_t class_index) const;
    void validate() const;

    static TextPromptSet build(std::vector<std::string> classes, std::string prompt_template,
                               const std::function<embedding::Embedding(const std::string&)>& embed_text);
};

// Substitutes `name` for the single "{}" placeholder.
std::string format_prompt(std::string_view prompt_template, std::string_view name);

struct LabeledObject {
    std::uint32_t object_id = 0;
    std::size_t label_index = 0;
    double score = 0.0;
};

// Cosine argmax per object; ties go to the lowest class index.
std::vector<LabeledObject> assign_labels(std::span<const fusion::Object3D> objects, const TextPromptSet& prompts);

struct GtInstance {
    Vec3 centroid = Vec3::Zero();
    std::size_t class_index = 0;
};

struct PredictedInstance {
    std::uint32_t id = 0;
    Vec3 centroid = Vec3::Zero();
};

struct Transfer {
    std::uint32_t pred_id = 0;
    std::size_t gt_index = 0;
    std::size_t class_index = 0;
};

// Nearest ground-truth centroid per prediction; ties go to the lowest GT index.
std::vector<Transfer> transfer_labels(std::span<const PredictedInstance> pred, std::span<const GtInstance> gt);

struct LabeledPoint {
    Vec3 point = Vec3::Zero();
    std::size_t class_index = 0;
};

struct SegMetrics {
    double mAcc = 0.0;
    double mIoU = 0.0;
    double fmIoU = 0.0;
    std::map<std::size_t, double> per_class_iou;
    std::map<std::size_t, double> per_class_acc;
    std::size_t gt_points = 0;
    std::size_t associated_points = 0;
};

// Every GT point takes the class of its nearest prediction within
// match_radius; GT points without one count as misses of their class.
// Averages run over classes present in the ground truth.
SegMetrics compute_metrics(std::span<const LabeledPoint> pred, std::span<const LabeledPoint> gt, double match_radius);

}  // namespace ovseg::labeling
