#include "ovseg/labeling_eval.hpp"

#include "ovseg/dbscan.hpp"
#include "ovseg/error.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace ovseg::labeling {

std::string format_prompt(std::string_view prompt_template, std::string_view name) {
    const auto pos = prompt_template.find("{}");
    require(pos != std::string_view::npos && prompt_template.find("{}", pos + 2) == std::string_view::npos,
            ErrorCode::InvalidArgument, "prompt template must contain exactly one {} placeholder");
    std::string out(prompt_template.substr(0, pos));
    out += name;
    out += prompt_template.substr(pos + 2);
    return out;
}

std::string TextPromptSet::prompt_for(std::size_t class_index) const {
    return format_prompt(prompt_template, classes.at(class_index));
}

void TextPromptSet::validate() const {
    require(!classes.empty(), ErrorCode::EmptyInput, "prompt set: no classes");
    require(classes.size() == embeddings.size(), ErrorCode::CountMismatch,
            "prompt set: " + std::to_string(classes.size()) + " classes but " + std::to_string(embeddings.size()) +
                " embeddings");
    (void)format_prompt(prompt_template, "");
}

TextPromptSet TextPromptSet::build(std::vector<std::string> classes, std::string prompt_template,
                                   const std::function<embedding::Embedding(const std::string&)>& embed_text) {
    TextPromptSet set{std::move(classes), std::move(prompt_template), {}};
    for (std::size_t c = 0; c < set.classes.size(); ++c) set.embeddings.push_back(embed_text(set.prompt_for(c)));
    set.validate();
    return set;
}

std::vector<LabeledObject> assign_labels(std::span<const fusion::Object3D> objects, const TextPromptSet& prompts) {
    prompts.validate();
    std::vector<LabeledObject> out;
    out.reserve(objects.size());
    for (const auto& obj : objects) {
        LabeledObject best{obj.id, 0, -std::numeric_limits<double>::infinity()};
        for (std::size_t c = 0; c < prompts.embeddings.size(); ++c) {
            require(prompts.embeddings[c].size() == obj.embedding.size(), ErrorCode::DimMismatch,
                    "assign_labels: object embedding dim " + std::to_string(obj.embedding.size()) +
                        " vs text embedding dim " + std::to_string(prompts.embeddings[c].size()));
            const double s = embedding::cosine(obj.embedding, prompts.embeddings[c]);
            if (s > best.score) {
                best.score = s;
                best.label_index = c;
            }
        }
        out.push_back(best);
    }
    return out;
}

std::vector<Transfer> transfer_labels(std::span<const PredictedInstance> pred, std::span<const GtInstance> gt) {
    require(!gt.empty(), ErrorCode::EmptyGT, "transfer_labels: no ground-truth instances");
    require(!pred.empty(), ErrorCode::EmptyInput, "transfer_labels: no predicted instances");
    std::vector<Transfer> out;
    out.reserve(pred.size());
    for (const auto& p : pred) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < gt.size(); ++g) {
            const double d = (gt[g].centroid - p.centroid).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = g;
            }
        }
        out.push_back({p.id, best, gt[best].class_index});
    }
    return out;
}

SegMetrics compute_metrics(std::span<const LabeledPoint> pred, std::span<const LabeledPoint> gt, double match_radius) {
    require(match_radius > 0.0, ErrorCode::InvalidArgument, "compute_metrics: match radius must be positive");
    require(!gt.empty(), ErrorCode::EmptyGT, "compute_metrics: no ground-truth points");

    std::vector<Vec3> pred_points;
    pred_points.reserve(pred.size());
    for (const auto& p : pred) pred_points.push_back(p.point);
    const clustering::HashGrid<3> grid(pred_points, match_radius);

    std::size_t num_classes = 0;
    for (const auto& p : pred) num_classes = std::max(num_classes, p.class_index + 1);
    for (const auto& g : gt) num_classes = std::max(num_classes, g.class_index + 1);

    std::vector<std::size_t> gt_count(num_classes, 0), tp(num_classes, 0), fp(num_classes, 0);
    std::vector<std::size_t> near;
    SegMetrics m;
    m.gt_points = gt.size();
    for (const auto& g : gt) {
        ++gt_count[g.class_index];
        grid.radius_query(g.point, match_radius, near);
        if (near.empty()) continue;
        std::size_t best = near.front();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t n : near) {
            const double d = (pred_points[n] - g.point).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = n;
            }
        }
        ++m.associated_points;
        const std::size_t predicted = pred[best].class_index;
        if (predicted == g.class_index) {
            ++tp[predicted];
        } else {
            ++fp[predicted];
        }
    }
    require(m.associated_points > 0, ErrorCode::NoAssociations,
            "compute_metrics: no ground-truth point lies within the match radius of a prediction");

    // Averages accumulate in long double and round once, so a mean of exact
    // count ratios lands on the nearest double.
    std::size_t present = 0;
    long double miou = 0, macc = 0, fmiou = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (gt_count[c] == 0) continue;
        ++present;
        const auto hit = static_cast<long double>(tp[c]);
        const auto denom = static_cast<long double>(gt_count[c] + fp[c]);  // tp + fp + fn
        const long double iou = hit / denom;
        const long double acc = hit / static_cast<long double>(gt_count[c]);
        m.per_class_iou[c] = static_cast<double>(iou);
        m.per_class_acc[c] = static_cast<double>(acc);
        miou += iou;
        macc += acc;
        fmiou += static_cast<long double>(gt_count[c]) * hit / (denom * static_cast<long double>(gt.size()));
    }
    m.mIoU = static_cast<double>(miou / static_cast<long double>(present));
    m.mAcc = static_cast<double>(macc / static_cast<long double>(present));
    m.fmIoU = static_cast<double>(fmiou);
    return m;
}

}  // namespace ovseg::labeling
