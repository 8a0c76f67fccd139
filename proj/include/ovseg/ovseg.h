/* C interface to the ovseg engine: open-vocabulary 3D instance fusion,
 * labeling/evaluation and language-guided object retrieval.
 *
 * Objects are opaque handles created by the create and load calls and released by the
 * matching *_destroy. Every fallible call returns an ovseg_status; on failure
 * ovseg_last_error() holds a message for the calling thread until its next
 * failing call.
 *
 * Variable-length text is returned through (buf, cap, needed): the call
 * writes at most cap bytes including the terminating NUL, stores the full
 * length (without NUL) in *needed, and returns OVSEG_ERR_BUFFER_TOO_SMALL
 * when it did not fit. buf may be NULL when cap is 0.
 */
#ifndef OVSEG_OVSEG_H
#define OVSEG_OVSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OVSEG_API __declspec(dllexport)
#else
#define OVSEG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ovseg_status {
    OVSEG_OK = 0,
    OVSEG_ERR_INVALID_ARGUMENT = 1,
    OVSEG_ERR_INVALID_DEPTH = 2,
    OVSEG_ERR_OUT_OF_BOUNDS = 3,
    OVSEG_ERR_BEHIND_CAMERA = 4,
    OVSEG_ERR_EMPTY_INPUT = 5,
    OVSEG_ERR_SIZE_MISMATCH = 6,
    OVSEG_ERR_FRAME_MISMATCH = 7,
    OVSEG_ERR_SCHEDULE_MISMATCH = 8,
    OVSEG_ERR_DEGENERATE = 9,
    OVSEG_ERR_ZERO_NORM = 10,
    OVSEG_ERR_ALL_INVALID_DEPTH = 11,
    OVSEG_ERR_ALL_NOISE = 12,
    OVSEG_ERR_DIM_MISMATCH = 13,
    OVSEG_ERR_EMPTY_GT = 14,
    OVSEG_ERR_NO_ASSOCIATIONS = 15,
    OVSEG_ERR_PARSE_FAILURE = 16,
    OVSEG_ERR_NO_OBJECTS = 17,
    OVSEG_ERR_NEVER_VISIBLE = 18,
    OVSEG_ERR_GATEWAY = 19,
    OVSEG_ERR_INSUFFICIENT_VIEWS = 20,
    OVSEG_ERR_EMPTY_RESULTS = 21,
    OVSEG_ERR_TRANSPORT = 22,
    OVSEG_ERR_IO = 23,
    OVSEG_ERR_FORMAT = 24,
    OVSEG_ERR_COUNT_MISMATCH = 25,
    OVSEG_ERR_BUFFER_TOO_SMALL = 100,
    OVSEG_ERR_INTERNAL = 101
} ovseg_status;

typedef struct ovseg_config ovseg_config;
typedef struct ovseg_scene ovseg_scene;
typedef struct ovseg_object_map ovseg_object_map;
typedef struct ovseg_gateway ovseg_gateway;

OVSEG_API const char* ovseg_version(void);
OVSEG_API const char* ovseg_last_error(void);
/* Stable upper-case name, e.g. "ZERO_NORM". */
OVSEG_API const char* ovseg_status_name(ovseg_status status);

/* ---- configuration ------------------------------------------------------ */

OVSEG_API ovseg_status ovseg_config_create(ovseg_config** out);
/* Key/value text file; unknown keys are rejected. */
OVSEG_API ovseg_status ovseg_config_load(const char* path, ovseg_config** out);
OVSEG_API ovseg_status ovseg_config_set(ovseg_config* config, const char* key, const char* value);
OVSEG_API ovseg_status ovseg_config_text(const ovseg_config* config, char* buf, size_t cap, size_t* needed);
/* 16 hex digits plus NUL. */
OVSEG_API ovseg_status ovseg_config_hash(const ovseg_config* config, char out[17]);
OVSEG_API void ovseg_config_destroy(ovseg_config* config);

/* ---- scenes ------------------------------------------------------------- */

typedef struct ovseg_scene_info {
    size_t frame_count;
    size_t mask_count;
    size_t gt_instance_count; /* 0 without annotations */
    int has_gt;
} ovseg_scene_info;

OVSEG_API ovseg_status ovseg_scene_load(const char* manifest_path, ovseg_scene** out);
OVSEG_API ovseg_status ovseg_scene_info_get(const ovseg_scene* scene, ovseg_scene_info* out);
OVSEG_API const char* ovseg_scene_id(const ovseg_scene* scene);
OVSEG_API void ovseg_scene_destroy(ovseg_scene* scene);

/* ---- fusion and object maps --------------------------------------------- */

typedef struct ovseg_fusion_stats {
    size_t lifted_points;
    size_t noise_points;
    size_t invalid_depth_masks;
    size_t all_noise_masks;
    size_t candidates;
    size_t merges;
} ovseg_fusion_stats;

typedef struct ovseg_object_info {
    uint32_t id;
    uint32_t merged_count;
    uint32_t point_count;
    double centroid[3];
    double box_min[3];
    double box_max[3];
} ovseg_object_info;

/* stats may be NULL. */
OVSEG_API ovseg_status ovseg_fuse(const ovseg_scene* scene, const ovseg_config* config, ovseg_object_map** out,
                                  ovseg_fusion_stats* stats);
OVSEG_API ovseg_status ovseg_object_map_save(const ovseg_object_map* map, const char* path);
OVSEG_API ovseg_status ovseg_object_map_load(const char* path, ovseg_object_map** out);
OVSEG_API size_t ovseg_object_map_count(const ovseg_object_map* map);
OVSEG_API ovseg_status ovseg_object_map_get(const ovseg_object_map* map, size_t index, ovseg_object_info* out);
/* Human-readable listing of every object. */
OVSEG_API ovseg_status ovseg_object_map_summary(const ovseg_object_map* map, char* buf, size_t cap, size_t* needed);
OVSEG_API void ovseg_object_map_destroy(ovseg_object_map* map);

/* ---- language/vision gateway -------------------------------------------- */

typedef enum ovseg_gateway_kind {
    OVSEG_GATEWAY_LIVE = 0,   /* HTTP endpoint from the config */
    OVSEG_GATEWAY_MOCK = 1,   /* deterministic; scripted from the scene's ground truth when given one */
    OVSEG_GATEWAY_REPLAY = 2  /* serves a recorded log */
} ovseg_gateway_kind;

/* scene is optional for MOCK and ignored otherwise; replay_log is required
 * for REPLAY and ignored otherwise. */
OVSEG_API ovseg_status ovseg_gateway_create(ovseg_gateway_kind kind, const ovseg_config* config,
                                            const ovseg_scene* scene, const char* replay_log, ovseg_gateway** out);
/* Appends every exchange from now on to a new log file at path. */
OVSEG_API ovseg_status ovseg_gateway_record(ovseg_gateway* gateway, const char* path);
OVSEG_API size_t ovseg_gateway_calls(const ovseg_gateway* gateway);
OVSEG_API void ovseg_gateway_destroy(ovseg_gateway* gateway);

/* ---- evaluation and retrieval ------------------------------------------- */

typedef struct ovseg_seg_metrics {
    double mAcc;
    double mIoU;
    double fmIoU;
    size_t object_count;
    size_t gt_instance_count;
} ovseg_seg_metrics;

/* Writes metrics.txt and metrics.kv into out_dir when it is not NULL. */
OVSEG_API ovseg_status ovseg_segment_eval(const ovseg_object_map* map, const ovseg_scene* scene,
                                          const ovseg_config* config, ovseg_gateway* gateway, const char* out_dir,
                                          ovseg_seg_metrics* out);

typedef struct ovseg_retrieval {
    uint32_t object_id;
    double box_min[3];
    double box_max[3];
    size_t candidate_count;
} ovseg_retrieval;

OVSEG_API ovseg_status ovseg_retrieve(const ovseg_object_map* map, const ovseg_scene* scene,
                                      const ovseg_config* config, ovseg_gateway* gateway, const char* query,
                                      ovseg_retrieval* out);

typedef struct ovseg_grounding_summary {
    size_t query_count;
    size_t failed_count; /* queries whose retrieval raised an error */
    double acc_at_0_1;
    double acc_at_0_25;
} ovseg_grounding_summary;

/* Runs every query of a query file. Scene s resolves to
 * <root>/<s>/manifest.json and <root>/<s>/objects.ovom, fusing and writing the
 * object map when it is missing. Writes results.tsv and accuracy.txt into
 * out_dir when it is not NULL. replay_log is used for REPLAY; record_log, when
 * not NULL, receives every exchange. */
OVSEG_API ovseg_status ovseg_retrieve_eval(const char* queries_path, const char* root, const ovseg_config* config,
                                           ovseg_gateway_kind kind, const char* replay_log, const char* record_log,
                                           const char* out_dir, ovseg_grounding_summary* out);

/* ---- synthetic scenes --------------------------------------------------- */

typedef struct ovseg_synth_options {
    uint64_t seed;
    uint32_t n_objects;  /* random layout only */
    uint32_t n_frames;   /* random layout only */
    double arc_deg;      /* random layout only; 0 means default */
    int grounding;       /* nonzero: fixed grounding layout with templated queries */
    double depth_sigma;
    double mask_dropout;
} ovseg_synth_options;

OVSEG_API void ovseg_synth_options_default(ovseg_synth_options* options);
/* Writes the scene into out_dir (manifest.json, frames/, gt/, queries.tsv).
 * Embeddings use the config's mock seed and dimension. */
OVSEG_API ovseg_status ovseg_synth(const ovseg_synth_options* options, const ovseg_config* config, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* OVSEG_OVSEG_H */
