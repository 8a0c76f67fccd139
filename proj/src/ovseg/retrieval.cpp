#include "ovseg/retrieval.hpp"

#include "ovseg/error.hpp"
#include "ovseg/labeling_eval.hpp"
#include "ovseg/prompts.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ovseg::retrieval {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::optional<long> parse_index(std::string_view reply) {
    std::string s = trim(reply);
    while (!s.empty() && (s.back() == '.' || s.back() == ')')) s.pop_back();
    if (s.empty()) return std::nullopt;
    long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::string fmt_vec(const Vec3& v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << "(" << v.x() << ", " << v.y() << ", " << v.z() << ")";
    return os.str();
}

std::string fmt_rect(const masks::PixelRect& r) {
    return std::to_string(r.x0) + " " + std::to_string(r.y0) + " " + std::to_string(r.x1) + " " + std::to_string(r.y1);
}

const geometry::Frame* find_frame(std::span<const geometry::Frame> frames, std::uint32_t id) {
    for (const auto& f : frames) {
        if (f.id == id) return &f;
    }
    return nullptr;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

std::string_view to_string(OrientationToken token) {
    switch (token) {
        case OrientationToken::Front: return "front";
        case OrientationToken::Back: return "back";
        case OrientationToken::Left: return "left";
        case OrientationToken::Right: return "right";
        case OrientationToken::Facing: return "facing";
    }
    return "front";
}

std::optional<OrientationToken> parse_token(std::string_view text) {
    for (auto t : {OrientationToken::Front, OrientationToken::Back, OrientationToken::Left, OrientationToken::Right,
                   OrientationToken::Facing}) {
        if (text == to_string(t)) return t;
    }
    return std::nullopt;
}

bool Orientation::has(OrientationToken t) const {
    return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

std::string StructuredQuery::main_phrase() const {
    std::string phrase;
    for (const auto& a : attributes) phrase += a + " ";
    return phrase + main;
}

// ---------------------------------------------------------------------------
// Query structuring

StructuredQuery parse_structured_reply(const std::string& reply, const std::string& raw) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    require(open != std::string::npos && close != std::string::npos && close > open, ErrorCode::ParseFailure,
            "structured query: reply holds no JSON object");
    json doc;
    try {
        doc = json::parse(reply.substr(open, close - open + 1));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseFailure, std::string("structured query: ") + e.what());
    }
    auto string_list = [](const json& node, const char* what) {
        std::vector<std::string> out;
        if (node.is_null()) return out;
        require(node.is_array(), ErrorCode::ParseFailure, std::string("structured query: ") + what + " is not a list");
        for (const auto& item : node) {
            require(item.is_string() && !item.get<std::string>().empty(), ErrorCode::ParseFailure,
                    std::string("structured query: ") + what + " holds a non-string");
            out.push_back(trim(item.get<std::string>()));
        }
        return out;
    };

    StructuredQuery q;
    q.raw = raw;
    require(doc.is_object() && doc.contains("main") && doc["main"].is_object(), ErrorCode::ParseFailure,
            "structured query: missing main object");
    const json& main = doc["main"];
    require(main.contains("name") && main["name"].is_string(), ErrorCode::ParseFailure,
            "structured query: main.name missing");
    q.main = trim(main["name"].get<std::string>());
    require(!q.main.empty(), ErrorCode::ParseFailure, "structured query: main.name empty");
    q.attributes = string_list(main.value("attributes", json()), "main.attributes");
    q.references = string_list(doc.value("references", json()), "references");

    const json orientation = doc.value("orientation", json());
    if (!orientation.is_null()) {
        require(orientation.is_object() && orientation.contains("anchor") && orientation["anchor"].is_string(),
                ErrorCode::ParseFailure, "structured query: orientation.anchor missing");
        Orientation o;
        o.anchor = trim(orientation["anchor"].get<std::string>());
        require(!o.anchor.empty(), ErrorCode::ParseFailure, "structured query: orientation.anchor empty");
        for (const auto& t : string_list(orientation.value("tokens", json()), "orientation.tokens")) {
            const auto token = parse_token(lower(t));
            require(token.has_value(), ErrorCode::ParseFailure, "structured query: unknown orientation token '" + t + "'");
            o.tokens.push_back(*token);
        }
        require(!o.tokens.empty(), ErrorCode::ParseFailure, "structured query: orientation without tokens");
        q.orientation = std::move(o);
    }
    return q;
}

StructuredQuery structure_query(const std::string& query, gateway::LanguageGateway& parser) {
    const std::string text = trim(query);
    require(!text.empty(), ErrorCode::ParseFailure, "structure_query: empty query");
    gateway::ChatRequest request{std::string(prompts::kStructureTask),
                                 {{gateway::Role::System, std::string(prompts::kStructureSystem), {}},
                                  {gateway::Role::User, std::string(prompts::kStructureUserPrefix) + text, {}}}};
    std::string reply = parser.chat(request);
    try {
        return parse_structured_reply(reply, text);
    } catch (const Error& first) {
        if (first.code() != ErrorCode::ParseFailure) throw;
        request.messages.push_back({gateway::Role::Assistant, reply, {}});
        request.messages.push_back({gateway::Role::User,
                                    "That reply does not follow the schema (" + std::string(first.what()) +
                                        "). Reply with the JSON object only.",
                                    {}});
        reply = parser.chat(request);
        return parse_structured_reply(reply, text);
    }
}

// ---------------------------------------------------------------------------
// Candidate mining

std::vector<Candidate> mine_candidates(const std::string& name, std::span<const fusion::Object3D> objects,
                                       const embedding::Embedding& text_embed, const MiningParams& params) {
    require(params.top_k >= 1, ErrorCode::InvalidArgument, "mine_candidates: K must be at least 1");
    require(!objects.empty(), ErrorCode::NoObjects, "mine_candidates: no objects to search for '" + name + "'");
    std::vector<Candidate> ranked;
    ranked.reserve(objects.size());
    for (const auto& obj : objects) {
        Candidate c;
        c.object = &obj;
        c.similarity = embedding::cosine(obj.embedding, text_embed);
        ranked.push_back(c);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Candidate& a, const Candidate& b) { return a.similarity > b.similarity; });
    if (ranked.size() > params.top_k) ranked.resize(params.top_k);

    std::vector<Candidate> kept;
    for (const auto& c : ranked) {
        bool duplicate = false;
        for (const auto& other : ranked) {
            if (other.object == c.object || other.object->voxels.size() <= c.object->voxels.size()) continue;
            if (geometry::voxel_iov(c.object->voxels, other.object->voxels).ab > params.dedup_overlap) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) kept.push_back(c);
    }
    return kept;
}

// ---------------------------------------------------------------------------
// View selection

ViewScore view_score(const Candidate& cand, const geometry::Frame& frame, std::span<const Candidate> others,
                     const ViewParams& params) {
    const int w = frame.depth.width(), h = frame.depth.height();
    std::vector<float> nearest_other;
    if (!others.empty()) {
        nearest_other.assign(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity());
        for (const auto& o : others) {
            if (o.object == cand.object) continue;
            for (const auto& p : o.object->points) {
                const Vec3 cam = frame.pose.to_camera(p);
                if (cam.z() <= 0.0) continue;
                const auto proj = geometry::project(p, frame);
                const long u = std::lround(proj.pixel.x()), v = std::lround(proj.pixel.y());
                if (u < 0 || v < 0 || u >= w || v >= h) continue;
                float& z = nearest_other[static_cast<std::size_t>(v) * w + static_cast<std::size_t>(u)];
                z = std::min(z, static_cast<float>(proj.depth));
            }
        }
    }

    ViewScore s;
    std::size_t visible = 0, occluded = 0;
    masks::PixelRect box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
                         std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
    for (const auto& p : cand.object->points) {
        const Vec3 cam = frame.pose.to_camera(p);
        if (cam.z() <= 0.0) continue;
        const auto proj = geometry::project(p, frame);
        const long u = std::lround(proj.pixel.x()), v = std::lround(proj.pixel.y());
        if (u < 0 || v < 0 || u >= w || v >= h) continue;
        const int iu = static_cast<int>(u), iv = static_cast<int>(v);
        if (!nearest_other.empty() &&
            nearest_other[static_cast<std::size_t>(iv) * w + iu] < proj.depth - params.depth_tol) {
            ++occluded;
        }
        if (!frame.depth.valid(iu, iv) || std::abs(frame.depth.at(iu, iv) - proj.depth) > params.depth_tol) continue;
        ++visible;
        box = {std::min(box.x0, iu), std::min(box.y0, iv), std::max(box.x1, iu + 1), std::max(box.y1, iv + 1)};
    }
    const double n = static_cast<double>(cand.object->points.size());
    s.visible_fraction = visible / n;
    s.occluded_fraction = occluded / n;
    s.score = s.visible_fraction - params.lambda_occ * s.occluded_fraction;
    if (visible > 0) s.bbox = box;
    return s;
}

ViewBox select_view(const Candidate& cand, std::span<const geometry::Frame> frames, std::span<const Candidate> others,
                    const ViewParams& params) {
    require(cand.object && !cand.object->points.empty(), ErrorCode::EmptyInput, "select_view: candidate has no points");
    require(!frames.empty(), ErrorCode::EmptyInput, "select_view: no frames");
    std::optional<ViewBox> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& frame : frames) {
        const ViewScore s = view_score(cand, frame, others, params);
        if (s.visible_fraction <= 0.0) continue;
        if (s.score > best_score) {
            best_score = s.score;
            best = ViewBox{frame.id, *s.bbox};
        }
    }
    if (!best) {
        fail(ErrorCode::NeverVisible, "select_view: object " + std::to_string(cand.object->id) + " is visible in no frame");
    }
    return *best;
}

// ---------------------------------------------------------------------------
// VLM verification

gateway::ChatRequest verify_request(const ViewBox& view, const geometry::Frame& frame, const std::string& name) {
    const std::string question = labeling::format_prompt(prompts::kVerifyQuestion, name);
    return {std::string(prompts::kVerifyTask),
            {{gateway::Role::User,
              question + "\nRegion: frame " + std::to_string(view.frame_id) + " box " + fmt_rect(view.bbox),
              {{frame.rgb_path.value_or(""), view.bbox}}}}};
}

bool verify_candidate(Candidate& cand, const ViewBox& view, const geometry::Frame& frame, const std::string& name,
                      gateway::LanguageGateway& vlm) {
    require(frame.id == view.frame_id, ErrorCode::FrameMismatch, "verify_candidate: view belongs to another frame");
    require(!view.bbox.empty(), ErrorCode::InvalidArgument, "verify_candidate: empty view box");
    std::string answer = lower(trim(vlm.chat(verify_request(view, frame, name))));
    while (!answer.empty() && std::ispunct(static_cast<unsigned char>(answer.back()))) answer.pop_back();
    bool verdict;
    if (answer == "yes" || answer.starts_with("yes,") || answer.starts_with("yes ")) {
        verdict = true;
    } else if (answer == "no" || answer.starts_with("no,") || answer.starts_with("no ")) {
        verdict = false;
    } else {
        fail(ErrorCode::GatewayError, "verify_candidate: reply is neither yes nor no: '" + answer + "'");
    }
    cand.verified = verdict ? Verification::Pass : Verification::Fail;
    return verdict;
}

// ---------------------------------------------------------------------------
// Orientation grounding

double viewing_yaw(const geometry::Frame& frame, const Vec3& center) {
    const Vec3 d = frame.pose.translation - center;
    double yaw = std::atan2(d.y(), d.x());
    if (yaw < 0.0) yaw += kTwoPi;
    return yaw >= kTwoPi ? 0.0 : yaw;
}

double bin_center(std::size_t bin, std::size_t n_bins) {
    return static_cast<double>(bin) * kTwoPi / static_cast<double>(n_bins);
}

std::size_t nearest_bin(double yaw, std::size_t n_bins) {
    const double width = kTwoPi / static_cast<double>(n_bins);
    const auto bin = static_cast<long>(std::floor(yaw / width + 0.5));
    const long n = static_cast<long>(n_bins);
    return static_cast<std::size_t>(((bin % n) + n) % n);
}

double ground_orientation(Candidate& cand, std::span<const geometry::Frame> frames, OrientationToken token,
                          gateway::LanguageGateway& vlm, std::size_t n_bins, const ViewParams& params) {
    require(n_bins >= 4, ErrorCode::InvalidArgument, "ground_orientation: need at least 4 yaw bins");
    require(cand.object != nullptr, ErrorCode::EmptyInput, "ground_orientation: empty candidate");
    const Vec3 center = cand.object->centroid();

    struct Tile {
        const geometry::Frame* frame = nullptr;
        masks::PixelRect bbox;
        double distance = std::numeric_limits<double>::infinity();
    };
    std::vector<Tile> tiles(n_bins);
    for (const auto& frame : frames) {
        const ViewScore s = view_score(cand, frame, {}, params);
        if (s.visible_fraction <= 0.0) continue;
        const double yaw = viewing_yaw(frame, center);
        const std::size_t bin = nearest_bin(yaw, n_bins);
        double dist = std::abs(yaw - bin_center(bin, n_bins));
        dist = std::min(dist, kTwoPi - dist);
        if (dist < tiles[bin].distance) tiles[bin] = {&frame, *s.bbox, dist};
    }
    const auto populated = std::count_if(tiles.begin(), tiles.end(), [](const Tile& t) { return t.frame != nullptr; });
    if (populated < 2) {
        fail(ErrorCode::InsufficientViews, "ground_orientation: views cover only " + std::to_string(populated) + " yaw bin(s)");
    }

    std::ostringstream text;
    text << "Object centroid: " << fmt_vec(center) << "\n";
    text << "Which tile shows the object's " << to_string(token) << " side?\n";
    gateway::Message user{gateway::Role::User, "", {}};
    for (std::size_t b = 0; b < n_bins; ++b) {
        text << "Tile " << b << ": ";
        if (tiles[b].frame) {
            text << "frame " << tiles[b].frame->id << " box " << fmt_rect(tiles[b].bbox) << "\n";
            user.images.push_back({tiles[b].frame->rgb_path.value_or(""), tiles[b].bbox});
        } else {
            text << "empty\n";
        }
    }
    user.text = text.str();
    const gateway::ChatRequest request{std::string(prompts::kOrientationTask),
                                       {{gateway::Role::System, std::string(prompts::kOrientationSystem), {}}, user}};
    const std::string reply = vlm.chat(request);
    const auto index = parse_index(reply);
    if (!index || *index < 0 || static_cast<std::size_t>(*index) >= n_bins) {
        fail(ErrorCode::GatewayError, "ground_orientation: reply '" + reply + "' is not a tile index");
    }
    const double yaw = bin_center(static_cast<std::size_t>(*index), n_bins);
    cand.yaw = yaw;
    return yaw;
}

// ---------------------------------------------------------------------------
// Final reasoning

gateway::ChatRequest final_request(const StructuredQuery& query, std::span<const Candidate> candidates,
                                   std::span<const ReferenceInfo> references) {
    std::ostringstream text;
    text << std::fixed << std::setprecision(4);
    text << "Query: " << query.raw << "\n";
    text << "Main object: " << query.main_phrase() << "\n";
    text << "Orientation: ";
    if (query.orientation) {
        text << "anchor=" << query.orientation->anchor << " tokens=";
        for (std::size_t i = 0; i < query.orientation->tokens.size(); ++i) {
            text << (i ? "," : "") << to_string(query.orientation->tokens[i]);
        }
        text << "\n";
    } else {
        text << "none\n";
    }
    text << "Candidates:\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        const auto box = c.object->bounds();
        text << i << ": centroid=" << fmt_vec(c.object->centroid()) << " extent=" << fmt_vec(box.extent()) << " yaw=";
        if (c.yaw) {
            text << *c.yaw;
        } else {
            text << "none";
        }
        text << " similarity=" << c.similarity << "\n";
    }
    text << "References:\n";
    for (const auto& r : references) {
        text << r.name << ": centroid=" << fmt_vec(r.centroid) << " yaw=";
        if (r.yaw) {
            text << *r.yaw;
        } else {
            text << "none";
        }
        text << "\n";
    }
    text << "Answer with the index of the candidate.";
    return {std::string(prompts::kFinalTask),
            {{gateway::Role::System, std::string(prompts::kFinalSystem), {}}, {gateway::Role::User, text.str(), {}}}};
}

std::size_t final_decision(const StructuredQuery& query, std::span<const Candidate> candidates,
                           std::span<const ReferenceInfo> references, gateway::LanguageGateway& llm) {
    require(!candidates.empty(), ErrorCode::NoObjects, "final_decision: no candidates");
    if (candidates.size() == 1) return 0;
    auto request = final_request(query, candidates, references);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string reply = llm.chat(request);
        if (const auto index = parse_index(reply); index && *index >= 0 && static_cast<std::size_t>(*index) < candidates.size()) {
            return static_cast<std::size_t>(*index);
        }
        request.messages.push_back({gateway::Role::Assistant, reply, {}});
        request.messages.push_back({gateway::Role::User,
                                    "Reply with a single integer between 0 and " +
                                        std::to_string(candidates.size() - 1) + ".",
                                    {}});
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (candidates[i].similarity > candidates[best].similarity) best = i;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Grounding metrics

GroundingResult make_grounding_result(const geometry::Box3& predicted, const geometry::Box3& gt, std::string subset,
                                      std::span<const double> thresholds) {
    GroundingResult r{predicted, gt, geometry::box_iou3d(predicted, gt), {}, std::move(subset)};
    for (double t : thresholds) r.correct_at[t] = r.iou > t;
    return r;
}

std::map<double, double> grounding_accuracy(std::span<const GroundingResult> results, std::span<const double> thresholds) {
    require(!results.empty(), ErrorCode::EmptyResults, "grounding_accuracy: no results");
    std::map<double, double> acc;
    for (double t : thresholds) {
        const auto hits = std::count_if(results.begin(), results.end(), [t](const GroundingResult& r) { return r.iou > t; });
        acc[t] = static_cast<double>(hits) / static_cast<double>(results.size());
    }
    return acc;
}

std::map<std::string, std::map<double, double>> grounding_accuracy_by_subset(std::span<const GroundingResult> results,
                                                                             std::span<const double> thresholds) {
    require(!results.empty(), ErrorCode::EmptyResults, "grounding_accuracy: no results");
    std::map<std::string, std::vector<GroundingResult>> groups;
    for (const auto& r : results) groups[r.subset.empty() ? "all" : r.subset].push_back(r);
    std::map<std::string, std::map<double, double>> out;
    for (const auto& [tag, group] : groups) out[tag] = grounding_accuracy(group, thresholds);
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

// Views and verifies the given candidates; failures are dropped, gateway
// faults leave the candidate unchecked.
std::vector<Candidate> verify_all(std::vector<Candidate> cands, const std::string& name,
                                  std::span<const geometry::Frame> frames, std::span<const Candidate> occluders,
                                  gateway::LanguageGateway& gw, const ViewParams& params) {
    std::vector<Candidate> kept;
    for (auto& c : cands) {
        try {
            c.best_view = select_view(c, frames, occluders, params);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NeverVisible) throw;
            kept.push_back(c);
            continue;
        }
        try {
            if (!verify_candidate(c, *c.best_view, *find_frame(frames, c.best_view->frame_id), name, gw)) continue;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::GatewayError && e.code() != ErrorCode::TransportError) throw;
        }
        kept.push_back(c);
    }
    return kept;
}

}  // namespace

RetrievalOutcome retrieve(const std::string& query, std::span<const fusion::Object3D> objects,
                          std::span<const geometry::Frame> frames, gateway::LanguageGateway& gw,
                          const RetrievalParams& params) {
    RetrievalOutcome out;
    out.query = structure_query(query, gw);
    const auto& sq = out.query;

    auto mine = [&](const std::string& phrase) {
        return mine_candidates(phrase, objects, gw.embed_text(labeling::format_prompt(params.prompt_template, phrase)),
                               params.mining);
    };
    std::vector<Candidate> mains = mine(sq.main_phrase());
    std::map<std::string, std::vector<Candidate>> refs;
    for (const auto& r : sq.references) refs.emplace(r, mine(r));

    std::vector<Candidate> occluders = mains;
    for (const auto& [name, list] : refs) occluders.insert(occluders.end(), list.begin(), list.end());

    std::vector<Candidate> verified = verify_all(mains, sq.main, frames, occluders, gw, params.view);
    // Nothing passed: keep the mined list rather than returning no answer.
    out.candidates = verified.empty() ? mains : std::move(verified);

    for (const auto& name : sq.references) {
        auto survivors = verify_all(refs[name], name, frames, occluders, gw, params.view);
        if (survivors.empty()) continue;
        Candidate& anchor = survivors.front();
        ReferenceInfo info{name, anchor.object->centroid(), std::nullopt};
        if (sq.orientation && sq.orientation->anchor == name) {
            try {
                info.yaw = ground_orientation(anchor, frames, OrientationToken::Front, gw, params.n_bins, params.view);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InsufficientViews && e.code() != ErrorCode::GatewayError &&
                    e.code() != ErrorCode::TransportError) {
                    throw;
                }
            }
        }
        out.references.push_back(std::move(info));
    }
    if (sq.orientation && sq.orientation->anchor == sq.main) {
        for (auto& c : out.candidates) {
            try {
                ground_orientation(c, frames, OrientationToken::Front, gw, params.n_bins, params.view);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InsufficientViews && e.code() != ErrorCode::GatewayError &&
                    e.code() != ErrorCode::TransportError) {
                    throw;
                }
            }
        }
    }

    out.chosen = final_decision(sq, out.candidates, out.references, gw);
    const auto& chosen = *out.candidates[out.chosen].object;
    out.object_id = chosen.id;
    out.predicted_box = chosen.bounds();
    return out;
}

}  // namespace ovseg::retrieval
