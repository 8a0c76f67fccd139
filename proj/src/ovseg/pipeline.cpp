#include "ovseg/pipeline.hpp"

#include "ovseg/error.hpp"
#include "ovseg/mask_refinement.hpp"

#include <cstdio>
#include <sstream>

namespace ovseg::pipeline {

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

fusion::FusionResult fuse(const dataset::Scene& scene, const Config& config) {
    config.validate();
    const auto& k = scene.manifest.intrinsics;
    const auto schedule = config.schedule(k.width, k.height);
    std::vector<std::vector<fusion::MaskObservation>> per_frame(scene.frames.size());
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
        const auto& raw = scene.raw_masks[f];
        std::vector<std::optional<embedding::Embedding>> aggregated(raw.size());
        for (const auto& refined : masks::refine_frame(raw, schedule)) {
            auto& agg = aggregated[refined.source];
            if (!agg) {
                try {
                    agg = embedding::aggregate_embedding(scene.crop_embeddings[f][refined.source], config.weights);
                } catch (const Error& e) {
                    // A mask whose crops cancel carries no usable embedding.
                    if (e.code() != ErrorCode::ZeroNorm) throw;
                    continue;
                }
            }
            per_frame[f].push_back({refined.mask,
                                    {scene.frames[f].id, static_cast<std::uint32_t>(refined.source), refined.fragment, 0},
                                    *agg});
        }
    }
    return fusion::fuse_scene(scene.frames, per_frame, config.fusion);
}

dataset::ObjectMap fuse_to_map(const dataset::Scene& scene, const Config& config, fusion::FusionStats* stats) {
    auto result = fuse(scene, config);
    if (stats) *stats = result.stats;
    return {scene.manifest.scene_id, config.hash(), config.fusion.voxel_size, std::move(result.objects)};
}

SegmentReport segment_eval(const dataset::ObjectMap& map, const dataset::GroundTruth& gt, const Config& config,
                           gateway::LanguageGateway& embedder) {
    require(!map.objects.empty(), ErrorCode::NoObjects, "segment-eval: object map is empty");
    require(!gt.instances.empty(), ErrorCode::EmptyGT, "segment-eval: no ground-truth instances");
    SegmentReport report;
    report.classes = gt.classes;
    report.config_hash = config.hash();
    report.object_count = map.objects.size();
    report.gt_instance_count = gt.instances.size();

    const auto prompts = labeling::TextPromptSet::build(gt.classes, config.prompt_template,
                                                        [&](const std::string& p) { return embedder.embed_text(p); });
    report.labels = labeling::assign_labels(map.objects, prompts);

    std::vector<labeling::LabeledPoint> pred;
    std::vector<labeling::PredictedInstance> centroids;
    for (std::size_t i = 0; i < map.objects.size(); ++i) {
        const auto& obj = map.objects[i];
        for (const auto& p : obj.points) pred.push_back({p, report.labels[i].label_index});
        centroids.push_back({obj.id, obj.centroid()});
    }
    report.transfers = labeling::transfer_labels(centroids, dataset::gt_instances(gt));
    report.metrics = labeling::compute_metrics(pred, dataset::gt_labeled_points(gt), config.match_radius);
    return report;
}

std::string metrics_table(const SegmentReport& r) {
    std::ostringstream os;
    os << "class                  IoU      Acc\n";
    for (const auto& [cls, iou] : r.metrics.per_class_iou) {
        char line[128];
        std::snprintf(line, sizeof line, "%-20s %6.4f   %6.4f\n", r.classes.at(cls).c_str(), iou,
                      r.metrics.per_class_acc.at(cls));
        os << line;
    }
    os << "\nmAcc  " << fixed(r.metrics.mAcc) << "\nmIoU  " << fixed(r.metrics.mIoU) << "\nfmIoU " << fixed(r.metrics.fmIoU)
       << "\nobjects " << r.object_count << " (ground truth " << r.gt_instance_count << ")\n";
    return os.str();
}

std::string metrics_kv(const SegmentReport& r) {
    std::ostringstream os;
    os << "config_hash=" << r.config_hash << "\n";
    os << "mAcc=" << fixed(r.metrics.mAcc, 6) << "\nmIoU=" << fixed(r.metrics.mIoU, 6) << "\nfmIoU=" << fixed(r.metrics.fmIoU, 6)
       << "\n";
    os << "objects=" << r.object_count << "\ngt_instances=" << r.gt_instance_count << "\n";
    os << "gt_points=" << r.metrics.gt_points << "\nassociated_points=" << r.metrics.associated_points << "\n";
    for (const auto& [cls, iou] : r.metrics.per_class_iou) os << "iou." << r.classes.at(cls) << "=" << fixed(iou, 6) << "\n";
    return os.str();
}

QueryOutcome run_query(const dataset::GroundingQuery& query, const dataset::ObjectMap& map, const dataset::Scene& scene,
                       gateway::LanguageGateway& gw, const Config& config) {
    QueryOutcome out{query, std::nullopt, "", {}};
    geometry::Box3 predicted;
    try {
        out.outcome = retrieval::retrieve(query.text, map.objects, scene.frames, gw, config.retrieval);
        predicted = out.outcome->predicted_box;
    } catch (const Error& e) {
        out.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    out.result = retrieval::make_grounding_result(predicted, query.gt_box, query.subset);
    return out;
}

std::string results_tsv(std::span<const QueryOutcome> outcomes) {
    std::string s = "# scene_id\tquery\tobject_id\tiou\tacc@0.1\tacc@0.25\tsubset\terror\n";
    for (const auto& o : outcomes) {
        s += o.query.scene_id + "\t" + o.query.text + "\t" + (o.outcome ? std::to_string(o.outcome->object_id) : "-") + "\t" +
             fixed(o.result.iou, 6) + "\t" + (o.result.iou > 0.1 ? "1" : "0") + "\t" + (o.result.iou > 0.25 ? "1" : "0") +
             "\t" + o.query.subset + "\t" + o.error + "\n";
    }
    return s;
}

std::string accuracy_table(std::span<const QueryOutcome> outcomes) {
    std::vector<retrieval::GroundingResult> results;
    for (const auto& o : outcomes) results.push_back(o.result);
    std::ostringstream os;
    os << "subset      n      A@0.1    A@0.25\n";
    auto row = [&](const std::string& name, std::size_t n, const std::map<double, double>& acc) {
        char line[128];
        std::snprintf(line, sizeof line, "%-10s %3zu   %7.4f   %7.4f\n", name.c_str(), n, acc.at(0.1), acc.at(0.25));
        os << line;
    };
    std::map<std::string, std::size_t> counts;
    for (const auto& r : results) ++counts[r.subset.empty() ? "all" : r.subset];
    for (const auto& [subset, acc] : retrieval::grounding_accuracy_by_subset(results)) row(subset, counts[subset], acc);
    row("overall", results.size(), retrieval::grounding_accuracy(results));
    return os.str();
}

}  // namespace ovseg::pipeline
