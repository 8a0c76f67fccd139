#pragma once

#include "ovseg/fusion.hpp"
#include "ovseg/gateway.hpp"
#include "ovseg/geometry.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ovseg::retrieval {

using geometry::Vec3;

enum class OrientationToken { Front, Back, Left, Right, Facing };
std::string_view to_string(OrientationToken token);
std::optional<OrientationToken> parse_token(std::string_view text);

struct Orientation {
    std::string anchor;
    std::vector<OrientationToken> tokens;

    bool has(OrientationToken t) const;
};

struct StructuredQuery {
    std::string main;
    std::vector<std::string> attributes;
    std::vector<std::string> references;
    std::optional<Orientation> orientation;
    std::string raw;

    // Attributes followed by the name, e.g. "red chair".
    std::string main_phrase() const;
};

// Validates a JSON reply against the schema and the closed token set.
StructuredQuery parse_structured_reply(const std::string& reply, const std::string& raw);
// One retry on a malformed reply, then ParseFailure.
StructuredQuery structure_query(const std::string& query, gateway::LanguageGateway& parser);

enum class Verification { Unchecked, Pass, Fail };

struct ViewBox {
    std::uint32_t frame_id = 0;
    masks::PixelRect bbox;
};

// Non-owning view of a fused object plus per-query annotations. The object
// must outlive the candidate.
struct Candidate {
    const fusion::Object3D* object = nullptr;
    double similarity = 0.0;
    std::optional<ViewBox> best_view;
    Verification verified = Verification::Unchecked;
    std::optional<double> yaw;
};

struct MiningParams {
    std::size_t top_k = 10;
    double dedup_overlap = 0.7;
};

// Top-k by cosine similarity (ties by object order), then drops any
// candidate whose IoV against a larger candidate exceeds dedup_overlap.
std::vector<Candidate> mine_candidates(const std::string& name, std::span<const fusion::Object3D> objects,
                                       const embedding::Embedding& text_embed, const MiningParams& params);

struct ViewParams {
    double lambda_occ = 0.5;
    double depth_tol = 0.1;
};

struct ViewScore {
    double visible_fraction = 0.0;
    double occluded_fraction = 0.0;
    double score = 0.0;
    std::optional<masks::PixelRect> bbox;  // tight box of visible projections
};

// visible: share of the candidate's points that land in the image with a
// depth within depth_tol of the depth map. occluded: share of its points
// hidden behind a projected point of another candidate.
ViewScore view_score(const Candidate& cand, const geometry::Frame& frame, std::span<const Candidate> others,
                     const ViewParams& params);
ViewBox select_view(const Candidate& cand, std::span<const geometry::Frame> frames, std::span<const Candidate> others,
                    const ViewParams& params);

gateway::ChatRequest verify_request(const ViewBox& view, const geometry::Frame& frame, const std::string& name);
// Sets cand.verified. A reply that is neither yes nor no throws GatewayError
// and leaves the candidate unchecked.
bool verify_candidate(Candidate& cand, const ViewBox& view, const geometry::Frame& frame, const std::string& name,
                      gateway::LanguageGateway& vlm);

// Camera yaw around the world z axis, seen from `center`, in [0, 2π).
double viewing_yaw(const geometry::Frame& frame, const Vec3& center);
double bin_center(std::size_t bin, std::size_t n_bins);
std::size_t nearest_bin(double yaw, std::size_t n_bins);

// Picks one view per yaw bin, asks the VLM which tile shows `token`, and
// stores the chosen bin-center yaw on the candidate.
double ground_orientation(Candidate& cand, std::span<const geometry::Frame> frames, OrientationToken token,
                          gateway::LanguageGateway& vlm, std::size_t n_bins, const ViewParams& params = {});

struct ReferenceInfo {
    std::string name;
    Vec3 centroid = Vec3::Zero();
    std::optional<double> yaw;
};

gateway::ChatRequest final_request(const StructuredQuery& query, std::span<const Candidate> candidates,
                                   std::span<const ReferenceInfo> references);
// Index into candidates. Invalid replies are retried once; after that the
// highest-similarity candidate is returned.
std::size_t final_decision(const StructuredQuery& query, std::span<const Candidate> candidates,
                           std::span<const ReferenceInfo> references, gateway::LanguageGateway& llm);

struct GroundingResult {
    geometry::Box3 predicted_box;
    geometry::Box3 gt_box;
    double iou = 0.0;
    std::map<double, bool> correct_at;
    std::string subset;
};

inline constexpr double kThresholds[] = {0.1, 0.25};

GroundingResult make_grounding_result(const geometry::Box3& predicted, const geometry::Box3& gt, std::string subset,
                                      std::span<const double> thresholds = kThresholds);
std::map<double, double> grounding_accuracy(std::span<const GroundingResult> results,
                                            std::span<const double> thresholds = kThresholds);
std::map<std::string, std::map<double, double>> grounding_accuracy_by_subset(
    std::span<const GroundingResult> results, std::span<const double> thresholds = kThresholds);

struct RetrievalParams {
    MiningParams mining;
    ViewParams view;
    std::size_t n_bins = 8;
    std::string prompt_template = "a photo of {}.";
};

struct RetrievalOutcome {
    StructuredQuery query;
    std::vector<Candidate> candidates;  // survivors passed to the final decision
    std::vector<ReferenceInfo> references;
    std::size_t chosen = 0;
    std::uint32_t object_id = 0;
    geometry::Box3 predicted_box;
};

RetrievalOutcome retrieve(const std::string& query, std::span<const fusion::Object3D> objects,
                          std::span<const geometry::Frame> frames, gateway::LanguageGateway& gateway,
                          const RetrievalParams& params);

}  // namespace ovseg::retrieval
