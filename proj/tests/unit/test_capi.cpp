// Links only libovseg and its public header.
#include "ovseg/ovseg.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Tmp {
    fs::path path;
    Tmp() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("ovseg_capi_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~Tmp() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& n) const { return (path / n).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Handles {
    ovseg_config* config = nullptr;
    ovseg_scene* scene = nullptr;
    ovseg_object_map* map = nullptr;
    ovseg_gateway* gateway = nullptr;
    ~Handles() {
        ovseg_gateway_destroy(gateway);
        ovseg_object_map_destroy(map);
        ovseg_scene_destroy(scene);
        ovseg_config_destroy(config);
    }
};

}  // namespace

TEST(CApi, VersionAndStatusNames) {
    ASSERT_NE(ovseg_version(), nullptr);
    EXPECT_GT(std::string(ovseg_version()).size(), 0u);
    EXPECT_STREQ(ovseg_status_name(OVSEG_OK), "OK");
    EXPECT_STREQ(ovseg_status_name(OVSEG_ERR_ZERO_NORM), "ZERO_NORM");
    EXPECT_STREQ(ovseg_status_name(OVSEG_ERR_IO), "IO_ERROR");
    EXPECT_STREQ(ovseg_status_name(OVSEG_ERR_BUFFER_TOO_SMALL), "BUFFER_TOO_SMALL");
    EXPECT_NE(ovseg_status_name(static_cast<ovseg_status>(777)), nullptr);
}

TEST(CApi, ConfigTextAndBuffers) {
    Handles h;
    ASSERT_EQ(ovseg_config_create(&h.config), OVSEG_OK);
    char hash0[17];
    ASSERT_EQ(ovseg_config_hash(h.config, hash0), OVSEG_OK);
    EXPECT_EQ(std::string(hash0).size(), 16u);

    ASSERT_EQ(ovseg_config_set(h.config, "fusion.gamma", "0.4"), OVSEG_OK);
    char hash1[17];
    ASSERT_EQ(ovseg_config_hash(h.config, hash1), OVSEG_OK);
    EXPECT_STRNE(hash0, hash1);

    size_t needed = 0;
    EXPECT_EQ(ovseg_config_text(h.config, nullptr, 0, &needed), OVSEG_ERR_BUFFER_TOO_SMALL);
    ASSERT_GT(needed, 0u);
    std::string small(4, '\xff');
    EXPECT_EQ(ovseg_config_text(h.config, small.data(), small.size(), &needed), OVSEG_ERR_BUFFER_TOO_SMALL);
    EXPECT_EQ(small[3], '\0');
    std::string buf(needed + 1, '\0');
    size_t again = 0;
    ASSERT_EQ(ovseg_config_text(h.config, buf.data(), buf.size(), &again), OVSEG_OK);
    EXPECT_EQ(again, needed);
    buf.resize(needed);
    EXPECT_NE(buf.find("fusion.gamma = 0.4"), std::string::npos) << buf;

    // The text loads back into the same hash.
    Tmp tmp;
    std::ofstream(tmp / "c.cfg") << buf;
    ovseg_config* loaded = nullptr;
    ASSERT_EQ(ovseg_config_load((tmp / "c.cfg").c_str(), &loaded), OVSEG_OK);
    char hash2[17];
    ovseg_config_hash(loaded, hash2);
    EXPECT_STREQ(hash1, hash2);
    ovseg_config_destroy(loaded);

    EXPECT_EQ(ovseg_config_set(h.config, "no.such.key", "1"), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_NE(std::string(ovseg_last_error()).find("no.such.key"), std::string::npos) << ovseg_last_error();
}

TEST(CApi, NullArguments) {
    ovseg_config* c = nullptr;
    EXPECT_EQ(ovseg_config_create(nullptr), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(ovseg_config_set(nullptr, "fusion.gamma", "0.3"), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(ovseg_config_load(nullptr, &c), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(c, nullptr);
    EXPECT_EQ(ovseg_scene_load(nullptr, nullptr), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(ovseg_fuse(nullptr, nullptr, nullptr, nullptr), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(ovseg_object_map_count(nullptr), 0u);
    ovseg_object_info info;
    EXPECT_EQ(ovseg_object_map_get(nullptr, 0, &info), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(ovseg_synth(nullptr, nullptr, nullptr), OVSEG_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(ovseg_gateway_calls(nullptr), 0u);
    // Destroying null handles is a no-op.
    ovseg_config_destroy(nullptr);
    ovseg_scene_destroy(nullptr);
    ovseg_object_map_destroy(nullptr);
    ovseg_gateway_destroy(nullptr);
}

TEST(CApi, MissingSceneIsIoError) {
    Tmp tmp;
    ovseg_scene* s = nullptr;
    EXPECT_EQ(ovseg_scene_load((tmp / "absent/manifest.json").c_str(), &s), OVSEG_ERR_IO);
    EXPECT_EQ(s, nullptr);
    EXPECT_NE(std::string(ovseg_last_error()).find("absent"), std::string::npos) << ovseg_last_error();
    EXPECT_EQ(ovseg_gateway_create(OVSEG_GATEWAY_REPLAY, nullptr, nullptr, nullptr, nullptr),
              OVSEG_ERR_INVALID_ARGUMENT);
}

TEST(CApi, SynthFuseEvaluate) {
    Tmp tmp;
    Handles h;
    ASSERT_EQ(ovseg_config_create(&h.config), OVSEG_OK);
    ovseg_synth_options opt;
    ovseg_synth_options_default(&opt);
    opt.seed = 11;
    opt.n_objects = 4;
    opt.n_frames = 6;
    ASSERT_EQ(ovseg_synth(&opt, h.config, (tmp / "scene").c_str()), OVSEG_OK) << ovseg_last_error();

    ASSERT_EQ(ovseg_scene_load((tmp / "scene/manifest.json").c_str(), &h.scene), OVSEG_OK) << ovseg_last_error();
    ovseg_scene_info si;
    ASSERT_EQ(ovseg_scene_info_get(h.scene, &si), OVSEG_OK);
    EXPECT_EQ(si.frame_count, 6u);
    EXPECT_TRUE(si.has_gt);
    EXPECT_EQ(si.gt_instance_count, 4u);
    EXPECT_GT(si.mask_count, 0u);
    EXPECT_GT(std::string(ovseg_scene_id(h.scene)).size(), 0u);

    ovseg_fusion_stats stats;
    ASSERT_EQ(ovseg_fuse(h.scene, h.config, &h.map, &stats), OVSEG_OK) << ovseg_last_error();
    EXPECT_GT(stats.lifted_points, 0u);
    EXPECT_GE(stats.candidates, ovseg_object_map_count(h.map));
    ASSERT_EQ(ovseg_object_map_count(h.map), 4u);

    ovseg_object_info info;
    for (size_t i = 0; i < 4; ++i) {
        ASSERT_EQ(ovseg_object_map_get(h.map, i, &info), OVSEG_OK);
        EXPECT_GT(info.point_count, 0u);
        for (int k = 0; k < 3; ++k) {
            EXPECT_LE(info.box_min[k], info.centroid[k]);
            EXPECT_GE(info.box_max[k], info.centroid[k]);
        }
    }
    EXPECT_EQ(ovseg_object_map_get(h.map, 4, &info), OVSEG_ERR_OUT_OF_BOUNDS);

    // Save, reload and save again: identical bytes.
    ASSERT_EQ(ovseg_object_map_save(h.map, (tmp / "a.ovom").c_str()), OVSEG_OK);
    ovseg_object_map* back = nullptr;
    ASSERT_EQ(ovseg_object_map_load((tmp / "a.ovom").c_str(), &back), OVSEG_OK);
    ASSERT_EQ(ovseg_object_map_save(back, (tmp / "b.ovom").c_str()), OVSEG_OK);
    EXPECT_EQ(slurp(tmp / "a.ovom"), slurp(tmp / "b.ovom"));
    size_t needed = 0;
    EXPECT_EQ(ovseg_object_map_summary(back, nullptr, 0, &needed), OVSEG_ERR_BUFFER_TOO_SMALL);
    EXPECT_GT(needed, 0u);
    ovseg_object_map_destroy(back);

    ASSERT_EQ(ovseg_gateway_create(OVSEG_GATEWAY_MOCK, h.config, h.scene, nullptr, &h.gateway), OVSEG_OK);
    ovseg_seg_metrics m;
    ASSERT_EQ(ovseg_segment_eval(h.map, h.scene, h.config, h.gateway, (tmp / "eval").c_str(), &m), OVSEG_OK)
        << ovseg_last_error();
    EXPECT_DOUBLE_EQ(m.mIoU, 1.0);
    EXPECT_DOUBLE_EQ(m.mAcc, 1.0);
    EXPECT_EQ(m.object_count, 4u);
    EXPECT_EQ(m.gt_instance_count, 4u);
    EXPECT_GT(ovseg_gateway_calls(h.gateway), 0u);
    EXPECT_TRUE(fs::exists(tmp / "eval/metrics.txt"));
    EXPECT_TRUE(fs::exists(tmp / "eval/metrics.kv"));
}

TEST(CApi, RetrieveAndReplay) {
    Tmp tmp;
    Handles h;
    ASSERT_EQ(ovseg_config_create(&h.config), OVSEG_OK);
    ovseg_synth_options opt;
    ovseg_synth_options_default(&opt);
    opt.seed = 3;
    opt.grounding = 1;
    ASSERT_EQ(ovseg_synth(&opt, h.config, (tmp / "g").c_str()), OVSEG_OK) << ovseg_last_error();
    ASSERT_EQ(ovseg_scene_load((tmp / "g/manifest.json").c_str(), &h.scene), OVSEG_OK);
    ASSERT_EQ(ovseg_fuse(h.scene, h.config, &h.map, nullptr), OVSEG_OK);
    ASSERT_EQ(ovseg_gateway_create(OVSEG_GATEWAY_MOCK, h.config, h.scene, nullptr, &h.gateway), OVSEG_OK);
    ASSERT_EQ(ovseg_gateway_record(h.gateway, (tmp / "log.ovrl").c_str()), OVSEG_OK);

    ovseg_retrieval r;
    ASSERT_EQ(ovseg_retrieve(h.map, h.scene, h.config, h.gateway, "the chair closest to the ball", &r), OVSEG_OK)
        << ovseg_last_error();
    EXPECT_GT(r.candidate_count, 1u);
    for (int k = 0; k < 3; ++k) EXPECT_LT(r.box_min[k], r.box_max[k]);

    // The recorded log answers the same query offline.
    ovseg_gateway* replay = nullptr;
    ASSERT_EQ(ovseg_gateway_create(OVSEG_GATEWAY_REPLAY, h.config, nullptr, (tmp / "log.ovrl").c_str(), &replay),
              OVSEG_OK)
        << ovseg_last_error();
    ovseg_retrieval again;
    ASSERT_EQ(ovseg_retrieve(h.map, h.scene, h.config, replay, "the chair closest to the ball", &again), OVSEG_OK)
        << ovseg_last_error();
    EXPECT_EQ(again.object_id, r.object_id);
    // A query never recorded is a gateway miss, not a silent answer.
    EXPECT_NE(ovseg_retrieve(h.map, h.scene, h.config, replay, "the table next to the lamp", &again), OVSEG_OK);
    ovseg_gateway_destroy(replay);

    EXPECT_EQ(ovseg_retrieve(h.map, h.scene, h.config, h.gateway, nullptr, &r), OVSEG_ERR_INVALID_ARGUMENT);
}

TEST(CApi, RetrieveEvalOverAQueryFile) {
    Tmp tmp;
    Handles h;
    ASSERT_EQ(ovseg_config_create(&h.config), OVSEG_OK);
    ovseg_synth_options opt;
    ovseg_synth_options_default(&opt);
    opt.seed = 5;
    opt.grounding = 1;
    ASSERT_EQ(ovseg_synth(&opt, h.config, (tmp / "stage").c_str()), OVSEG_OK);
    ASSERT_EQ(ovseg_scene_load((tmp / "stage/manifest.json").c_str(), &h.scene), OVSEG_OK);
    const std::string id = ovseg_scene_id(h.scene);
    fs::create_directories(tmp.path / "root");
    fs::rename(tmp.path / "stage", tmp.path / "root" / id);

    ovseg_grounding_summary s;
    ASSERT_EQ(ovseg_retrieve_eval((tmp / ("root/" + id + "/queries.tsv")).c_str(), (tmp / "root").c_str(), h.config,
                                  OVSEG_GATEWAY_MOCK, nullptr, nullptr, (tmp / "out").c_str(), &s),
              OVSEG_OK)
        << ovseg_last_error();
    EXPECT_GT(s.query_count, 0u);
    EXPECT_EQ(s.failed_count, 0u);
    EXPECT_DOUBLE_EQ(s.acc_at_0_25, 1.0);
    EXPECT_LE(s.acc_at_0_1, 1.0);
    EXPECT_TRUE(fs::exists(tmp / ("root/" + id + "/objects.ovom")));
    EXPECT_TRUE(fs::exists(tmp / "out/results.tsv"));
    EXPECT_TRUE(fs::exists(tmp / "out/accuracy.txt"));
}
