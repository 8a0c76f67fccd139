#include "ovseg/oracle.hpp"

#include "ovseg/error.hpp"
#include "ovseg/prompts.hpp"

#include <json.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

namespace ovseg::oracle {

using geometry::Vec3;
using nlohmann::json;

namespace {

constexpr auto kIcase = std::regex::ECMAScript | std::regex::icase;

struct ParsedQuery {
    enum class Relation { None, Closest, Farthest, Left, Right };
    Relation relation = Relation::None;
    std::string main;
    std::string reference;
};

ParsedQuery parse_query(std::string text) {
    while (!text.empty() && (text.back() == '.' || text.back() == ' ')) text.pop_back();
    static const std::regex closest(R"(^(?:the )?(.+?) (?:that is )?(?:closest|nearest) to (?:the )?(.+)$)", kIcase);
    static const std::regex farthest(R"(^(?:the )?(.+?) (?:that is )?(?:farthest|furthest) from (?:the )?(.+)$)", kIcase);
    static const std::regex facing(R"(^facing (?:the )?(.+?), (?:pick )?(?:the )?(.+?) on (?:the|your) (left|right)$)", kIcase);
    static const std::regex plain(R"(^(?:the )?(.+)$)", kIcase);
    std::smatch m;
    using R = ParsedQuery::Relation;
    if (std::regex_match(text, m, closest)) return {R::Closest, m[1], m[2]};
    if (std::regex_match(text, m, farthest)) return {R::Farthest, m[1], m[2]};
    if (std::regex_match(text, m, facing)) return {m[3] == "left" ? R::Left : R::Right, m[2], m[1]};
    if (std::regex_match(text, m, plain)) return {R::None, m[1], ""};
    return {R::None, text, ""};
}

std::optional<std::string> structure(const gateway::ChatRequest& req) {
    for (const auto& msg : req.messages) {
        if (msg.role != gateway::Role::User || !msg.text.starts_with(prompts::kStructureUserPrefix)) continue;
        const auto q = parse_query(msg.text.substr(prompts::kStructureUserPrefix.size()));
        json doc{{"main", {{"name", q.main}, {"attributes", json::array()}}}, {"references", json::array()},
                 {"orientation", nullptr}};
        if (!q.reference.empty()) doc["references"].push_back(q.reference);
        using R = ParsedQuery::Relation;
        if (q.relation == R::Left || q.relation == R::Right) {
            doc["orientation"] = {{"anchor", q.reference},
                                  {"tokens", {"facing", q.relation == R::Left ? "left" : "right"}}};
        }
        return doc.dump();
    }
    return std::nullopt;
}

struct SceneTruth {
    std::vector<std::string> classes;
    std::vector<dataset::GtObject> instances;
    std::map<std::uint32_t, dataset::InstanceMap> maps;  // by frame id
};

std::optional<std::string> verify(const SceneTruth& truth, const gateway::ChatRequest& req) {
    const std::string text = gateway::message_text(req);
    static const std::regex question(R"(Is there a (.+?) in this image region)");
    static const std::regex region(R"(Region: frame (\d+) box (-?\d+) (-?\d+) (-?\d+) (-?\d+))");
    std::smatch q, r;
    if (!std::regex_search(text, q, question) || !std::regex_search(text, r, region)) return std::nullopt;
    const auto it = truth.maps.find(static_cast<std::uint32_t>(std::stoul(r[1])));
    if (it == truth.maps.end()) return std::nullopt;
    const auto& map = it->second;
    const int x0 = std::max(0, std::stoi(r[2])), y0 = std::max(0, std::stoi(r[3]));
    const int x1 = std::min(map.width, std::stoi(r[4])), y1 = std::min(map.height, std::stoi(r[5]));
    std::map<std::int32_t, std::size_t> votes;
    for (int v = y0; v < y1; ++v) {
        for (int u = x0; u < x1; ++u) {
            if (const auto id = map.at(u, v); id >= 0) ++votes[id];
        }
    }
    if (votes.empty()) return "no";
    const auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& inst : truth.instances) {
        if (static_cast<std::int32_t>(inst.id) == best->first) return truth.classes[inst.class_index] == q[1].str() ? "yes" : "no";
    }
    return "no";
}

double angle_between(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
    return std::min(d, 2.0 * std::numbers::pi - d);
}

std::optional<std::string> orientation(const SceneTruth& truth, const gateway::ChatRequest& req) {
    const std::string text = gateway::message_text(req);
    static const std::regex centroid(R"(Object centroid: \(([-0-9.]+), ([-0-9.]+), ([-0-9.]+)\))");
    static const std::regex side(R"(object's (\w+) side)");
    static const std::regex tile(R"(Tile (\d+): (frame|empty))");
    std::smatch c, s;
    if (!std::regex_search(text, c, centroid) || !std::regex_search(text, s, side)) return std::nullopt;
    const Vec3 p(std::stod(c[1]), std::stod(c[2]), std::stod(c[3]));
    const dataset::GtObject* nearest = nullptr;
    for (const auto& inst : truth.instances) {
        if (!nearest || (inst.box.center() - p).norm() < (nearest->box.center() - p).norm()) nearest = &inst;
    }
    if (!nearest || !nearest->front_yaw) return "0";
    const std::string token = s[1];
    double offset = 0.0;
    if (token == "back") offset = std::numbers::pi;
    if (token == "left") offset = std::numbers::pi / 2.0;
    if (token == "right") offset = -std::numbers::pi / 2.0;
    const double wanted = *nearest->front_yaw + offset;

    std::vector<bool> populated;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), tile); it != std::sregex_iterator(); ++it) {
        populated.push_back((*it)[2] == "frame");
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < populated.size(); ++i) {
        if (!populated[i]) continue;
        const double center = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(populated.size());
        if (!best || angle_between(center, wanted) <
                         angle_between(2.0 * std::numbers::pi * static_cast<double>(*best) / static_cast<double>(populated.size()), wanted)) {
            best = i;
        }
    }
    return best ? std::to_string(*best) : "0";
}

std::optional<std::string> final_choice(const gateway::ChatRequest& req) {
    const std::string text = gateway::message_text(req);
    static const std::regex query_line(R"(^Query: (.*)$)");
    static const std::regex cand_line(R"(^(\d+): centroid=\(([-0-9.]+), ([-0-9.]+), ([-0-9.]+)\))");
    static const std::regex ref_line(R"(^(.+?): centroid=\(([-0-9.]+), ([-0-9.]+), ([-0-9.]+)\) yaw=(\S+))");
    std::string query;
    std::vector<Vec3> cands;
    std::map<std::string, std::pair<Vec3, std::optional<double>>> refs;
    enum { Head, Cands, Refs } section = Head;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        std::smatch m;
        if (line == "Candidates:") {
            section = Cands;
        } else if (line == "References:") {
            section = Refs;
        } else if (section == Head && std::regex_match(line, m, query_line)) {
            query = m[1];
        } else if (section == Cands && std::regex_search(line, m, cand_line)) {
            cands.emplace_back(std::stod(m[2]), std::stod(m[3]), std::stod(m[4]));
        } else if (section == Refs && std::regex_search(line, m, ref_line)) {
            std::optional<double> yaw;
            if (m[5] != "none") yaw = std::stod(m[5]);
            refs[m[1]] = {Vec3(std::stod(m[2]), std::stod(m[3]), std::stod(m[4])), yaw};
        }
    }
    if (cands.empty()) return std::nullopt;
    const auto q = parse_query(query);
    const auto ref = refs.find(q.reference);
    if (q.relation == ParsedQuery::Relation::None || ref == refs.end()) return "0";
    const Vec3 anchor = ref->second.first;
    std::function<double(const Vec3&)> score;
    switch (q.relation) {
        case ParsedQuery::Relation::Closest: score = [&](const Vec3& c) { return -(c - anchor).norm(); }; break;
        case ParsedQuery::Relation::Farthest: score = [&](const Vec3& c) { return (c - anchor).norm(); }; break;
        case ParsedQuery::Relation::Left:
        case ParsedQuery::Relation::Right: {
            if (!ref->second.second) return "0";
            const double yaw = *ref->second.second;
            const Vec3 left(std::sin(yaw), -std::cos(yaw), 0.0);
            const double sign = q.relation == ParsedQuery::Relation::Left ? 1.0 : -1.0;
            score = [=](const Vec3& c) { return sign * (c - anchor).dot(left); };
            break;
        }
        case ParsedQuery::Relation::None: return "0";
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i) {
        if (score(cands[i]) > score(cands[best])) best = i;
    }
    return std::to_string(best);
}

}  // namespace

void install(gateway::MockGateway& gw, const dataset::Scene& scene) {
    require(scene.gt.has_value(), ErrorCode::EmptyGT, "oracle: scene " + scene.manifest.scene_id + " has no annotations");
    auto truth = std::make_shared<SceneTruth>();
    truth->classes = scene.gt->classes;
    truth->instances = scene.gt->instances;
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
        if (scene.instance_maps[f]) truth->maps.emplace(scene.frames[f].id, *scene.instance_maps[f]);
    }
    gw.add_handler([](const gateway::ChatRequest& r) -> std::optional<std::string> {
        return r.task == prompts::kStructureTask ? structure(r) : std::nullopt;
    });
    gw.add_handler([truth](const gateway::ChatRequest& r) -> std::optional<std::string> {
        return r.task == prompts::kVerifyTask ? verify(*truth, r) : std::nullopt;
    });
    gw.add_handler([truth](const gateway::ChatRequest& r) -> std::optional<std::string> {
        return r.task == prompts::kOrientationTask ? orientation(*truth, r) : std::nullopt;
    });
    gw.add_handler([](const gateway::ChatRequest& r) -> std::optional<std::string> {
        return r.task == prompts::kFinalTask ? final_choice(r) : std::nullopt;
    });
}

std::unique_ptr<gateway::MockGateway> make_gateway(const dataset::Scene& scene, std::size_t dim, std::uint64_t seed) {
    auto gw = std::make_unique<gateway::MockGateway>(dim, seed);
    install(*gw, scene);
    return gw;
}

}  // namespace ovseg::oracle
