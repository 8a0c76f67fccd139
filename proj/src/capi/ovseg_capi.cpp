#include "ovseg/ovseg.h"

#include "ovseg/binary_io.hpp"
#include "ovseg/config.hpp"
#include "ovseg/dataset_io.hpp"
#include "ovseg/error.hpp"
#include "ovseg/gateway.hpp"
#include "ovseg/oracle.hpp"
#include "ovseg/pipeline.hpp"
#include "ovseg/synth.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <sstream>
#include <string>

struct ovseg_config {
    ovseg::Config value;
};

struct ovseg_scene {
    ovseg::dataset::Scene value;
};

struct ovseg_object_map {
    ovseg::dataset::ObjectMap value;
};

struct ovseg_gateway {
    std::unique_ptr<ovseg::gateway::LanguageGateway> value;
    std::shared_ptr<ovseg::gateway::ReplayLog> recorder;
};

namespace {

using ovseg::ErrorCode;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

ovseg_status set_error(ovseg_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

template <class F>
ovseg_status guarded(F&& body) {
    try {
        body();
        return OVSEG_OK;
    } catch (const ovseg::Error& e) {
        return set_error(static_cast<ovseg_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(OVSEG_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(OVSEG_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(OVSEG_ERR_INTERNAL, "unknown exception");
    }
}

void need(const void* p, const char* what) {
    if (!p) ovseg::fail(ErrorCode::InvalidArgument, std::string(what) + " is null");
}

ovseg_status copy_out(const std::string& text, char* buf, std::size_t cap, std::size_t* needed) {
    if (needed) *needed = text.size();
    if (cap > 0 && !buf) return set_error(OVSEG_ERR_INVALID_ARGUMENT, "buffer is null but capacity is nonzero");
    if (cap > 0) {
        const std::size_t n = std::min(cap - 1, text.size());
        std::memcpy(buf, text.data(), n);
        buf[n] = '\0';
    }
    if (cap <= text.size())
        return set_error(OVSEG_ERR_BUFFER_TOO_SMALL, "buffer holds " + std::to_string(cap) + " bytes, need " +
                                                         std::to_string(text.size() + 1));
    return OVSEG_OK;
}

void put3(double out[3], const ovseg::geometry::Vec3& v) {
    for (int i = 0; i < 3; ++i) out[i] = v[i];
}

bool oracle_capable(const ovseg::dataset::Scene& scene) {
    if (!scene.gt) return false;
    for (const auto& m : scene.instance_maps)
        if (!m) return false;
    return !scene.instance_maps.empty();
}

std::unique_ptr<ovseg::gateway::LanguageGateway> make_gateway(ovseg_gateway_kind kind, const ovseg::Config& config,
                                                              const ovseg::dataset::Scene* scene,
                                                              const std::shared_ptr<ovseg::gateway::ReplayLog>& replay) {
    namespace gw = ovseg::gateway;
    switch (kind) {
        case OVSEG_GATEWAY_LIVE:
            return std::make_unique<gw::HttpGateway>(config.gateway);
        case OVSEG_GATEWAY_MOCK:
            if (scene && oracle_capable(*scene))
                return ovseg::oracle::make_gateway(*scene, config.gateway.dim, config.mock_seed);
            return std::make_unique<gw::MockGateway>(config.gateway.dim, config.mock_seed);
        case OVSEG_GATEWAY_REPLAY:
            need(replay.get(), "replay log");
            return std::make_unique<gw::ReplayGateway>(config.gateway.dim, replay);
    }
    ovseg::fail(ErrorCode::InvalidArgument, "unknown gateway kind " + std::to_string(static_cast<int>(kind)));
}

}  // namespace

extern "C" {

const char* ovseg_version(void) { return "0.1.0"; }

const char* ovseg_last_error(void) { return g_last_error.c_str(); }

const char* ovseg_status_name(ovseg_status status) {
    switch (status) {
        case OVSEG_OK: return "OK";
        case OVSEG_ERR_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
        case OVSEG_ERR_INVALID_DEPTH: return "INVALID_DEPTH";
        case OVSEG_ERR_OUT_OF_BOUNDS: return "OUT_OF_BOUNDS";
        case OVSEG_ERR_BEHIND_CAMERA: return "BEHIND_CAMERA";
        case OVSEG_ERR_EMPTY_INPUT: return "EMPTY_INPUT";
        case OVSEG_ERR_SIZE_MISMATCH: return "SIZE_MISMATCH";
        case OVSEG_ERR_FRAME_MISMATCH: return "FRAME_MISMATCH";
        case OVSEG_ERR_SCHEDULE_MISMATCH: return "SCHEDULE_MISMATCH";
        case OVSEG_ERR_DEGENERATE: return "DEGENERATE";
        case OVSEG_ERR_ZERO_NORM: return "ZERO_NORM";
        case OVSEG_ERR_ALL_INVALID_DEPTH: return "ALL_INVALID_DEPTH";
        case OVSEG_ERR_ALL_NOISE: return "ALL_NOISE";
        case OVSEG_ERR_DIM_MISMATCH: return "DIM_MISMATCH";
        case OVSEG_ERR_EMPTY_GT: return "EMPTY_GT";
        case OVSEG_ERR_NO_ASSOCIATIONS: return "NO_ASSOCIATIONS";
        case OVSEG_ERR_PARSE_FAILURE: return "PARSE_FAILURE";
        case OVSEG_ERR_NO_OBJECTS: return "NO_OBJECTS";
        case OVSEG_ERR_NEVER_VISIBLE: return "NEVER_VISIBLE";
        case OVSEG_ERR_GATEWAY: return "GATEWAY_ERROR";
        case OVSEG_ERR_INSUFFICIENT_VIEWS: return "INSUFFICIENT_VIEWS";
        case OVSEG_ERR_EMPTY_RESULTS: return "EMPTY_RESULTS";
        case OVSEG_ERR_TRANSPORT: return "TRANSPORT_ERROR";
        case OVSEG_ERR_IO: return "IO_ERROR";
        case OVSEG_ERR_FORMAT: return "FORMAT_ERROR";
        case OVSEG_ERR_COUNT_MISMATCH: return "COUNT_MISMATCH";
        case OVSEG_ERR_BUFFER_TOO_SMALL: return "BUFFER_TOO_SMALL";
        case OVSEG_ERR_INTERNAL: return "INTERNAL";
    }
    return "UNKNOWN";
}

// ---- configuration

ovseg_status ovseg_config_create(ovseg_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new ovseg_config{};
    });
}

ovseg_status ovseg_config_load(const char* path, ovseg_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto cfg = std::make_unique<ovseg_config>();
        cfg->value = ovseg::Config::load(path);
        *out = cfg.release();
    });
}

ovseg_status ovseg_config_set(ovseg_config* config, const char* key, const char* value) {
    return guarded([&] {
        need(config, "config");
        need(key, "key");
        need(value, "value");
        // Validate on a copy so a rejected value leaves the config untouched.
        ovseg::Config next = config->value;
        next.set(key, value);
        next.validate();
        config->value = std::move(next);
    });
}

ovseg_status ovseg_config_text(const ovseg_config* config, char* buf, size_t cap, size_t* needed) {
    std::string text;
    const ovseg_status st = guarded([&] {
        need(config, "config");
        text = config->value.to_text();
    });
    return st == OVSEG_OK ? copy_out(text, buf, cap, needed) : st;
}

ovseg_status ovseg_config_hash(const ovseg_config* config, char out[17]) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        const std::string h = config->value.hash();
        std::memcpy(out, h.c_str(), 17);
    });
}

void ovseg_config_destroy(ovseg_config* config) { delete config; }

// ---- scenes

ovseg_status ovseg_scene_load(const char* manifest_path, ovseg_scene** out) {
    return guarded([&] {
        need(manifest_path, "manifest path");
        need(out, "out");
        auto scene = std::make_unique<ovseg_scene>();
        scene->value = ovseg::dataset::load_scene(manifest_path);
        *out = scene.release();
    });
}

ovseg_status ovseg_scene_info_get(const ovseg_scene* scene, ovseg_scene_info* out) {
    return guarded([&] {
        need(scene, "scene");
        need(out, "out");
        const auto& s = scene->value;
        *out = {};
        out->frame_count = s.frames.size();
        for (const auto& m : s.raw_masks) out->mask_count += m.size();
        out->has_gt = s.gt ? 1 : 0;
        out->gt_instance_count = s.gt ? s.gt->instances.size() : 0;
    });
}

const char* ovseg_scene_id(const ovseg_scene* scene) { return scene ? scene->value.manifest.scene_id.c_str() : ""; }

void ovseg_scene_destroy(ovseg_scene* scene) { delete scene; }

// ---- fusion and object maps

ovseg_status ovseg_fuse(const ovseg_scene* scene, const ovseg_config* config, ovseg_object_map** out,
                        ovseg_fusion_stats* stats) {
    return guarded([&] {
        need(scene, "scene");
        need(config, "config");
        need(out, "out");
        ovseg::fusion::FusionStats s;
        auto map = std::make_unique<ovseg_object_map>();
        map->value = ovseg::pipeline::fuse_to_map(scene->value, config->value, &s);
        if (stats) *stats = {s.lifted_points, s.noise_points, s.invalid_depth_masks, s.all_noise_masks, s.candidates, s.merges};
        *out = map.release();
    });
}

ovseg_status ovseg_object_map_save(const ovseg_object_map* map, const char* path) {
    return guarded([&] {
        need(map, "object map");
        need(path, "path");
        ovseg::dataset::write_object_map(path, map->value);
    });
}

ovseg_status ovseg_object_map_load(const char* path, ovseg_object_map** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto map = std::make_unique<ovseg_object_map>();
        map->value = ovseg::dataset::read_object_map(path);
        *out = map.release();
    });
}

size_t ovseg_object_map_count(const ovseg_object_map* map) { return map ? map->value.objects.size() : 0; }

ovseg_status ovseg_object_map_get(const ovseg_object_map* map, size_t index, ovseg_object_info* out) {
    return guarded([&] {
        need(map, "object map");
        need(out, "out");
        const auto& objects = map->value.objects;
        if (index >= objects.size())
            ovseg::fail(ErrorCode::OutOfBounds,
                        "object index " + std::to_string(index) + " of " + std::to_string(objects.size()));
        const auto& o = objects[index];
        *out = {};
        out->id = o.id;
        out->merged_count = o.merged_count();
        out->point_count = static_cast<std::uint32_t>(o.points.size());
        put3(out->centroid, o.centroid());
        const auto box = o.bounds();
        put3(out->box_min, box.min_corner);
        put3(out->box_max, box.max_corner);
    });
}

ovseg_status ovseg_object_map_summary(const ovseg_object_map* map, char* buf, size_t cap, size_t* needed) {
    std::string text;
    const ovseg_status st = guarded([&] {
        need(map, "object map");
        const auto& m = map->value;
        std::ostringstream os;
        os << "scene " << m.scene_id << "  config " << m.config_hash << "  voxel " << m.voxel_size << "  objects "
           << m.objects.size() << "\n";
        os << "   id  merged   points  voxels  centroid                      extent\n";
        for (const auto& o : m.objects) {
            const auto c = o.centroid();
            const auto e = o.bounds().extent();
            char line[200];
            std::snprintf(line, sizeof line, "%5u  %6u  %7zu  %6zu  (%7.3f, %7.3f, %7.3f)  (%5.2f, %5.2f, %5.2f)\n", o.id,
                          o.merged_count(), o.points.size(), o.voxels.size(), c.x(), c.y(), c.z(), e.x(), e.y(), e.z());
            os << line;
        }
        text = os.str();
    });
    return st == OVSEG_OK ? copy_out(text, buf, cap, needed) : st;
}

void ovseg_object_map_destroy(ovseg_object_map* map) { delete map; }

// ---- gateway

ovseg_status ovseg_gateway_create(ovseg_gateway_kind kind, const ovseg_config* config, const ovseg_scene* scene,
                                  const char* replay_log, ovseg_gateway** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        std::shared_ptr<ovseg::gateway::ReplayLog> replay;
        if (kind == OVSEG_GATEWAY_REPLAY) {
            need(replay_log, "replay log path");
            replay = ovseg::gateway::ReplayLog::load(replay_log);
        }
        auto gw = std::make_unique<ovseg_gateway>();
        gw->value = make_gateway(kind, config->value, scene ? &scene->value : nullptr, replay);
        *out = gw.release();
    });
}

ovseg_status ovseg_gateway_record(ovseg_gateway* gateway, const char* path) {
    return guarded([&] {
        need(gateway, "gateway");
        need(path, "path");
        auto log = std::make_shared<ovseg::gateway::ReplayLog>();
        log->attach(path);
        gateway->recorder = log;
        gateway->value->record_to(log);
    });
}

size_t ovseg_gateway_calls(const ovseg_gateway* gateway) { return gateway ? gateway->value->transport_calls() : 0; }

void ovseg_gateway_destroy(ovseg_gateway* gateway) { delete gateway; }

// ---- evaluation and retrieval

ovseg_status ovseg_segment_eval(const ovseg_object_map* map, const ovseg_scene* scene, const ovseg_config* config,
                                ovseg_gateway* gateway, const char* out_dir, ovseg_seg_metrics* out) {
    return guarded([&] {
        need(map, "object map");
        need(scene, "scene");
        need(config, "config");
        need(gateway, "gateway");
        if (!scene->value.gt)
            ovseg::fail(ErrorCode::EmptyGT, scene->value.manifest_path.string() + ": scene has no ground truth");
        const auto report = ovseg::pipeline::segment_eval(map->value, *scene->value.gt, config->value, *gateway->value);
        if (out_dir) {
            const fs::path dir(out_dir);
            fs::create_directories(dir);
            ovseg::io::write_file(dir / "metrics.txt", ovseg::pipeline::metrics_table(report));
            ovseg::io::write_file(dir / "metrics.kv", ovseg::pipeline::metrics_kv(report));
        }
        if (out) {
            *out = {};
            out->mAcc = report.metrics.mAcc;
            out->mIoU = report.metrics.mIoU;
            out->fmIoU = report.metrics.fmIoU;
            out->object_count = report.object_count;
            out->gt_instance_count = report.gt_instance_count;
        }
    });
}

ovseg_status ovseg_retrieve(const ovseg_object_map* map, const ovseg_scene* scene, const ovseg_config* config,
                            ovseg_gateway* gateway, const char* query, ovseg_retrieval* out) {
    return guarded([&] {
        need(map, "object map");
        need(scene, "scene");
        need(config, "config");
        need(gateway, "gateway");
        need(query, "query");
        need(out, "out");
        const auto r = ovseg::retrieval::retrieve(query, map->value.objects, scene->value.frames, *gateway->value,
                                                  config->value.retrieval);
        *out = {};
        out->object_id = r.object_id;
        put3(out->box_min, r.predicted_box.min_corner);
        put3(out->box_max, r.predicted_box.max_corner);
        out->candidate_count = r.candidates.size();
    });
}

ovseg_status ovseg_retrieve_eval(const char* queries_path, const char* root, const ovseg_config* config,
                                 ovseg_gateway_kind kind, const char* replay_log, const char* record_log,
                                 const char* out_dir, ovseg_grounding_summary* out) {
    return guarded([&] {
        need(queries_path, "queries path");
        need(root, "root");
        need(config, "config");
        const auto& cfg = config->value;
        const auto queries = ovseg::dataset::read_queries(queries_path);
        if (queries.empty()) ovseg::fail(ErrorCode::EmptyResults, std::string(queries_path) + ": no queries");

        std::shared_ptr<ovseg::gateway::ReplayLog> replay;
        if (kind == OVSEG_GATEWAY_REPLAY) {
            need(replay_log, "replay log path");
            replay = ovseg::gateway::ReplayLog::load(replay_log);
        }
        std::shared_ptr<ovseg::gateway::ReplayLog> recorder;
        if (record_log) {
            recorder = std::make_shared<ovseg::gateway::ReplayLog>();
            recorder->attach(record_log);
        }

        // Queries keep file order in the results; scenes load lazily, once.
        std::map<std::string, std::vector<std::size_t>> by_scene;
        for (std::size_t i = 0; i < queries.size(); ++i) by_scene[queries[i].scene_id].push_back(i);

        std::vector<ovseg::pipeline::QueryOutcome> outcomes(queries.size());
        std::unique_ptr<ovseg::gateway::LanguageGateway> shared;  // live gateways span scenes
        for (const auto& [scene_id, indices] : by_scene) {
            const fs::path dir = fs::path(root) / scene_id;
            const fs::path manifest = dir / "manifest.json";
            if (!fs::exists(manifest))
                ovseg::fail(ErrorCode::Io, manifest.string() + ": manifest not found for scene " + scene_id);
            const auto scene = ovseg::dataset::load_scene(manifest);
            const fs::path map_path = dir / "objects.ovom";
            ovseg::dataset::ObjectMap map;
            if (fs::exists(map_path)) {
                map = ovseg::dataset::read_object_map(map_path);
            } else {
                ovseg::dataset::write_object_map(map_path, ovseg::pipeline::fuse_to_map(scene, cfg));
                map = ovseg::dataset::read_object_map(map_path);
            }

            std::unique_ptr<ovseg::gateway::LanguageGateway> local;
            ovseg::gateway::LanguageGateway* gw = nullptr;
            if (kind == OVSEG_GATEWAY_LIVE) {
                if (!shared) shared = make_gateway(kind, cfg, nullptr, nullptr);
                gw = shared.get();
            } else {
                local = make_gateway(kind, cfg, &scene, replay);
                gw = local.get();
            }
            if (recorder) gw->record_to(recorder);
            for (std::size_t i : indices) outcomes[i] = ovseg::pipeline::run_query(queries[i], map, scene, *gw, cfg);
        }

        if (out_dir) {
            const fs::path dir(out_dir);
            fs::create_directories(dir);
            ovseg::io::write_file(dir / "results.tsv", ovseg::pipeline::results_tsv(outcomes));
            ovseg::io::write_file(dir / "accuracy.txt", ovseg::pipeline::accuracy_table(outcomes));
        }
        if (out) {
            std::vector<ovseg::retrieval::GroundingResult> results;
            std::size_t failed = 0;
            for (const auto& o : outcomes) {
                results.push_back(o.result);
                if (!o.outcome) ++failed;
            }
            const auto acc = ovseg::retrieval::grounding_accuracy(results);
            *out = {};
            out->query_count = outcomes.size();
            out->failed_count = failed;
            out->acc_at_0_1 = acc.at(0.1);
            out->acc_at_0_25 = acc.at(0.25);
        }
    });
}

// ---- synthetic scenes

void ovseg_synth_options_default(ovseg_synth_options* options) {
    if (!options) return;
    const ovseg::synth::RandomSceneOptions d;
    *options = {};
    options->n_objects = static_cast<std::uint32_t>(d.n_objects);
    options->n_frames = static_cast<std::uint32_t>(d.n_frames);
    options->arc_deg = d.arc_deg;
}

ovseg_status ovseg_synth(const ovseg_synth_options* options, const ovseg_config* config, const char* out_dir) {
    return guarded([&] {
        need(options, "options");
        need(config, "config");
        need(out_dir, "output directory");
        const auto& cfg = config->value;
        ovseg::synth::SynthSceneSpec spec;
        if (options->grounding) {
            spec = ovseg::synth::grounding_scene(options->seed);
        } else {
            ovseg::synth::RandomSceneOptions ro;
            ro.n_objects = options->n_objects;
            ro.n_frames = options->n_frames;
            if (options->arc_deg > 0) ro.arc_deg = options->arc_deg;
            spec = ovseg::synth::random_scene(options->seed, ro);
        }
        if (!(options->depth_sigma >= 0) || !std::isfinite(options->depth_sigma))
            ovseg::fail(ErrorCode::InvalidArgument, "depth sigma must be finite and >= 0");
        if (!(options->mask_dropout >= 0 && options->mask_dropout < 1))
            ovseg::fail(ErrorCode::InvalidArgument, "mask dropout must be in [0, 1)");
        spec.depth_sigma = options->depth_sigma;
        spec.mask_dropout = options->mask_dropout;
        spec.embedding_dim = cfg.gateway.dim;
        spec.embedding_seed = cfg.mock_seed;
        spec.prompt_template = cfg.prompt_template;
        ovseg::synth::write_scene(spec, out_dir);
    });
}

}  // extern "C"
