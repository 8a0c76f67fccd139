#pragma once

#include "ovseg/config.hpp"
#include "ovseg/dataset_io.hpp"
#include "ovseg/fusion.hpp"
#include "ovseg/gateway.hpp"
#include "ovseg/labeling_eval.hpp"
#include "ovseg/retrieval.hpp"

#include <string>
#include <vector>

// End-to-end stages over loaded scenes.
namespace ovseg::pipeline {

// Mask refinement, crop aggregation and fusion for one scene. Fragments of a
// raw mask share that mask's aggregated embedding.
fusion::FusionResult fuse(const dataset::Scene& scene, const Config& config);
dataset::ObjectMap fuse_to_map(const dataset::Scene& scene, const Config& config, fusion::FusionStats* stats = nullptr);

struct SegmentReport {
    labeling::SegMetrics metrics;
    std::vector<labeling::LabeledObject> labels;
    std::vector<labeling::Transfer> transfers;
    std::vector<std::string> classes;
    std::size_t object_count = 0;
    std::size_t gt_instance_count = 0;
    std::string config_hash;
};

// Prompts are restricted to the classes present in the ground truth.
SegmentReport segment_eval(const dataset::ObjectMap& map, const dataset::GroundTruth& gt, const Config& config,
                           gateway::LanguageGateway& embedder);

std::string metrics_table(const SegmentReport& report);
std::string metrics_kv(const SegmentReport& report);

struct QueryOutcome {
    dataset::GroundingQuery query;
    std::optional<retrieval::RetrievalOutcome> outcome;  // empty when retrieval failed
    std::string error;
    retrieval::GroundingResult result;
};

QueryOutcome run_query(const dataset::GroundingQuery& query, const dataset::ObjectMap& map, const dataset::Scene& scene,
                       gateway::LanguageGateway& gw, const Config& config);

std::string results_tsv(std::span<const QueryOutcome> outcomes);
std::string accuracy_table(std::span<const QueryOutcome> outcomes);

}  // namespace ovseg::pipeline
