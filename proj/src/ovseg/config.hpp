#pragma once

#include "ovseg/context_embedding.hpp"
#include "ovseg/fusion.hpp"
#include "ovseg/gateway.hpp"
#include "ovseg/mask_refinement.hpp"
#include "ovseg/retrieval.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ovseg {

// Every tunable of the pipeline. Serialized as sorted "key = value" lines;
// the hash of that text is stamped into every output.
struct Config {
    fusion::FusionParams fusion;

    std::vector<double> mask_thresholds = {1.0, 0.3, 0.5};
    double mask_min_area_fraction = 0.0005;
    int mask_margin_px = 1;
    double mask_dbscan_eps_px = 3.0;
    std::size_t mask_dbscan_min_pts = 8;

    embedding::EmbeddingWeights weights;

    std::string prompt_template = "a photo of {}.";
    double match_radius = 0.05;

    retrieval::RetrievalParams retrieval;
    gateway::GatewayConfig gateway;
    std::uint64_t mock_seed = 0;

    static Config parse(const std::string& text, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    // Applies one "key = value" setting; unknown keys are rejected.
    void set(const std::string& key, const std::string& value);
    std::string to_text() const;
    std::string hash() const;  // first 16 hex digits of SHA-256(to_text())
    void validate() const;

    masks::GranularitySchedule schedule(int width, int height) const;
};

}  // namespace ovseg
