// Command-line front end. Talks to the engine only through the C API.
#include "ovseg/ovseg.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

// Carries an engine status up to main, which prints it and exits nonzero.
struct Failure : std::runtime_error {
    ovseg_status status;
    Failure(ovseg_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

void check(ovseg_status st) {
    if (st != OVSEG_OK) throw Failure(st, ovseg_last_error());
}

template <class T, void (*Destroy)(T*)>
struct Deleter {
    void operator()(T* p) const { Destroy(p); }
};
using ConfigPtr = std::unique_ptr<ovseg_config, Deleter<ovseg_config, ovseg_config_destroy>>;
using ScenePtr = std::unique_ptr<ovseg_scene, Deleter<ovseg_scene, ovseg_scene_destroy>>;
using MapPtr = std::unique_ptr<ovseg_object_map, Deleter<ovseg_object_map, ovseg_object_map_destroy>>;
using GatewayPtr = std::unique_ptr<ovseg_gateway, Deleter<ovseg_gateway, ovseg_gateway_destroy>>;

std::string fetch_text(ovseg_status (*fn)(const void*, char*, size_t, size_t*), const void* h) {
    size_t n = 0;
    fn(h, nullptr, 0, &n);
    std::string s(n + 1, '\0');
    check(fn(h, s.data(), s.size(), &n));
    s.resize(n);
    return s;
}

std::string config_text(const ovseg_config* c) {
    return fetch_text([](const void* h, char* b, size_t cap, size_t* n) {
        return ovseg_config_text(static_cast<const ovseg_config*>(h), b, cap, n);
    }, c);
}

std::string map_summary(const ovseg_object_map* m) {
    return fetch_text([](const void* h, char* b, size_t cap, size_t* n) {
        return ovseg_object_map_summary(static_cast<const ovseg_object_map*>(h), b, cap, n);
    }, m);
}

struct Common {
    std::string config_path;
    std::string gateway = "mock";
    std::string replay_log;
    std::string record_log;
    std::optional<unsigned long long> seed;
    std::optional<double> voxel_size, gamma, delta;
    std::optional<std::string> weights;
    std::optional<unsigned> topk;
    std::vector<std::string> sets;  // raw key=value overrides
};

void add_common(CLI::App& app, Common& c) {
    app.add_option("--config", c.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
    app.add_option("--gateway", c.gateway, "Language/vision backend")
        ->check(CLI::IsMember({"live", "mock", "replay"}));
    app.add_option("--replay", c.replay_log, "Recorded log to serve with --gateway replay");
    app.add_option("--record", c.record_log, "Record every gateway exchange to this log");
    app.add_option("--seed", c.seed, "Mock gateway seed (synth: scene seed)");
    app.add_option("--voxel-size", c.voxel_size, "Voxel edge in meters");
    app.add_option("--gamma", c.gamma, "Overlap threshold for merging");
    app.add_option("--delta", c.delta, "Maximum overlap-ratio gap for merging");
    app.add_option("--weights", c.weights, "Five comma-separated crop weights");
    app.add_option("--topk", c.topk, "Candidates kept per phrase");
    app.add_option("--set", c.sets, "Override any config key: key=value");
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ConfigPtr make_config(const Common& c, bool seed_is_mock) {
    ovseg_config* raw = nullptr;
    check(c.config_path.empty() ? ovseg_config_create(&raw) : ovseg_config_load(c.config_path.c_str(), &raw));
    ConfigPtr cfg(raw);
    auto set = [&](const char* key, const std::string& value) { check(ovseg_config_set(cfg.get(), key, value.c_str())); };
    if (c.voxel_size) set("fusion.voxel_size", num(*c.voxel_size));
    if (c.gamma) set("fusion.gamma", num(*c.gamma));
    if (c.delta) set("fusion.delta", num(*c.delta));
    if (c.weights) set("embedding.weights", *c.weights);
    if (c.topk) set("retrieval.top_k", std::to_string(*c.topk));
    if (c.seed && seed_is_mock) set("mock.seed", std::to_string(*c.seed));
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Failure(OVSEG_ERR_INVALID_ARGUMENT, "--set expects key=value, got '" + kv + "'");
        set(kv.substr(0, eq).c_str(), kv.substr(eq + 1));
    }
    return cfg;
}

ovseg_gateway_kind gateway_kind(const Common& c) {
    if (c.gateway == "live") return OVSEG_GATEWAY_LIVE;
    if (c.gateway == "replay") {
        if (c.replay_log.empty()) throw Failure(OVSEG_ERR_INVALID_ARGUMENT, "--gateway replay needs --replay LOG");
        return OVSEG_GATEWAY_REPLAY;
    }
    return OVSEG_GATEWAY_MOCK;
}

GatewayPtr make_gateway(const Common& c, const ovseg_config* cfg, const ovseg_scene* scene) {
    ovseg_gateway* raw = nullptr;
    check(ovseg_gateway_create(gateway_kind(c), cfg, scene, c.replay_log.c_str(), &raw));
    GatewayPtr gw(raw);
    if (!c.record_log.empty()) check(ovseg_gateway_record(gw.get(), c.record_log.c_str()));
    return gw;
}

ScenePtr load_scene(const std::string& manifest) {
    if (!std::filesystem::exists(manifest))
        throw Failure(OVSEG_ERR_IO, manifest + ": manifest not found");
    ovseg_scene* raw = nullptr;
    check(ovseg_scene_load(manifest.c_str(), &raw));
    return ScenePtr(raw);
}

MapPtr load_map(const std::string& path) {
    if (!std::filesystem::exists(path)) throw Failure(OVSEG_ERR_IO, path + ": object map not found");
    ovseg_object_map* raw = nullptr;
    check(ovseg_object_map_load(path.c_str(), &raw));
    return MapPtr(raw);
}

MapPtr fuse(const ovseg_scene* scene, const ovseg_config* cfg, bool verbose) {
    ovseg_object_map* raw = nullptr;
    ovseg_fusion_stats st{};
    check(ovseg_fuse(scene, cfg, &raw, &st));
    if (verbose)
        std::printf("lifted %zu points (%zu noise), %zu masks without depth, %zu all-noise, %zu candidates, %zu merges\n",
                    st.lifted_points, st.noise_points, st.invalid_depth_masks, st.all_noise_masks, st.candidates,
                    st.merges);
    return MapPtr(raw);
}

void print_box(const double lo[3], const double hi[3]) {
    std::printf("box [%.4f, %.4f, %.4f] - [%.4f, %.4f, %.4f]\n", lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-vocabulary 3D instance segmentation and object retrieval"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ovseg_version());

    Common common;

    auto* synth = app.add_subcommand("synth", "Write a synthetic scene");
    std::string synth_out;
    ovseg_synth_options sopt;
    ovseg_synth_options_default(&sopt);
    bool grounding = false;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--objects", sopt.n_objects, "Number of objects (random layout)");
    synth->add_option("--frames", sopt.n_frames, "Number of frames (random layout)");
    synth->add_option("--arc", sopt.arc_deg, "Camera arc in degrees (random layout)");
    synth->add_flag("--grounding", grounding, "Grounding layout with templated queries");
    synth->add_option("--depth-sigma", sopt.depth_sigma, "Depth noise in meters");
    synth->add_option("--dropout", sopt.mask_dropout, "Probability of dropping an object's masks per frame");
    add_common(*synth, common);

    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse a scene into a 3D object map");
    std::string scene_path, map_path;
    fuse_cmd->add_option("--scene", scene_path, "Scene manifest")->required();
    fuse_cmd->add_option("--out", map_path, "Object map to write")->required();
    add_common(*fuse_cmd, common);

    auto* eval_cmd = app.add_subcommand("segment-eval", "Label objects and score against ground truth");
    std::string eval_out;
    eval_cmd->add_option("--scene", scene_path, "Scene manifest")->required();
    eval_cmd->add_option("--objects", map_path, "Object map (fused on the fly when omitted)");
    eval_cmd->add_option("--out", eval_out, "Directory for metrics.txt and metrics.kv");
    add_common(*eval_cmd, common);

    auto* ret_cmd = app.add_subcommand("retrieve", "Find the object a query refers to");
    std::string query;
    ret_cmd->add_option("--scene", scene_path, "Scene manifest")->required();
    ret_cmd->add_option("--objects", map_path, "Object map (fused on the fly when omitted)");
    ret_cmd->add_option("--query", query, "Free-form query")->required();
    add_common(*ret_cmd, common);

    auto* reval_cmd = app.add_subcommand("retrieve-eval", "Run a query file and report grounding accuracy");
    std::string queries_path, root, reval_out;
    reval_cmd->add_option("--queries", queries_path, "Query file (TSV)")->required();
    reval_cmd->add_option("--root", root, "Directory holding <scene_id>/manifest.json")->required();
    reval_cmd->add_option("--out", reval_out, "Directory for results.tsv and accuracy.txt");
    add_common(*reval_cmd, common);

    auto* inspect_cmd = app.add_subcommand("inspect", "Describe an object map, scene or config");
    inspect_cmd->add_option("--objects", map_path, "Object map");
    inspect_cmd->add_option("--scene", scene_path, "Scene manifest");
    add_common(*inspect_cmd, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            sopt.grounding = grounding ? 1 : 0;
            if (common.seed) sopt.seed = *common.seed;
            auto cfg = make_config(common, false);
            check(ovseg_synth(&sopt, cfg.get(), synth_out.c_str()));
            std::printf("%s\n", (std::filesystem::path(synth_out) / "manifest.json").string().c_str());
        } else if (*fuse_cmd) {
            auto cfg = make_config(common, true);
            auto scene = load_scene(scene_path);
            auto map = fuse(scene.get(), cfg.get(), true);
            check(ovseg_object_map_save(map.get(), map_path.c_str()));
            std::printf("%zu objects -> %s\n", ovseg_object_map_count(map.get()), map_path.c_str());
        } else if (*eval_cmd) {
            auto cfg = make_config(common, true);
            auto scene = load_scene(scene_path);
            auto map = map_path.empty() ? fuse(scene.get(), cfg.get(), false) : load_map(map_path);
            auto gw = make_gateway(common, cfg.get(), scene.get());
            ovseg_seg_metrics m{};
            check(ovseg_segment_eval(map.get(), scene.get(), cfg.get(), gw.get(), eval_out.empty() ? nullptr : eval_out.c_str(),
                                     &m));
            std::printf("objects %zu  gt_instances %zu\nmAcc %.4f  mIoU %.4f  fmIoU %.4f\n", m.object_count,
                        m.gt_instance_count, m.mAcc, m.mIoU, m.fmIoU);
        } else if (*ret_cmd) {
            auto cfg = make_config(common, true);
            auto scene = load_scene(scene_path);
            auto map = map_path.empty() ? fuse(scene.get(), cfg.get(), false) : load_map(map_path);
            auto gw = make_gateway(common, cfg.get(), scene.get());
            ovseg_retrieval r{};
            check(ovseg_retrieve(map.get(), scene.get(), cfg.get(), gw.get(), query.c_str(), &r));
            std::printf("object %u  (%zu candidates)\n", r.object_id, r.candidate_count);
            print_box(r.box_min, r.box_max);
        } else if (*reval_cmd) {
            auto cfg = make_config(common, true);
            if (!std::filesystem::exists(queries_path)) throw Failure(OVSEG_ERR_IO, queries_path + ": query file not found");
            ovseg_grounding_summary s{};
            check(ovseg_retrieve_eval(queries_path.c_str(), root.c_str(), cfg.get(), gateway_kind(common),
                                      common.replay_log.empty() ? nullptr : common.replay_log.c_str(),
                                      common.record_log.empty() ? nullptr : common.record_log.c_str(),
                                      reval_out.empty() ? nullptr : reval_out.c_str(), &s));
            std::printf("queries %zu  failed %zu\nA@0.1 %.4f  A@0.25 %.4f\n", s.query_count, s.failed_count, s.acc_at_0_1,
                        s.acc_at_0_25);
        } else if (*inspect_cmd) {
            auto cfg = make_config(common, true);
            if (!map_path.empty()) {
                auto map = load_map(map_path);
                std::fputs(map_summary(map.get()).c_str(), stdout);
            }
            if (!scene_path.empty()) {
                auto scene = load_scene(scene_path);
                ovseg_scene_info info{};
                check(ovseg_scene_info_get(scene.get(), &info));
                std::printf("scene %s: %zu frames, %zu masks, %s\n", ovseg_scene_id(scene.get()), info.frame_count,
                            info.mask_count,
                            info.has_gt ? (std::to_string(info.gt_instance_count) + " gt instances").c_str() : "no gt");
            }
            if (map_path.empty() && scene_path.empty()) {
                char hash[17];
                check(ovseg_config_hash(cfg.get(), hash));
                std::printf("# config %s\n%s", hash, config_text(cfg.get()).c_str());
            }
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s: %s\n", ovseg_status_name(f.status), f.what());
        return 1;
    }
    return 0;
}
