/*
 * Public C interface of the QoE toolkit.
 *
 * Every fallible call returns a status code (QOE_OK on success) and
 * leaves a human-readable description of the last failure in
 * thread-local storage, readable via qoe_last_error_message(). Objects
 * are opaque handles created by the library and released with their
 * matching *_free function.
 */
#ifndef QOE_QOE_H
#define QOE_QOE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QOE_API __declspec(dllexport)
#else
#define QOE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
enum {
  QOE_OK = 0,
  QOE_E_INVALID_ARGUMENT = 1, /* bad parameter or call sequence */
  QOE_E_IO = 2,               /* file missing or unreadable/unwritable */
  QOE_E_PARSE = 3,            /* malformed input document or config */
  QOE_E_DATA = 4,             /* valid syntax, unusable content */
  QOE_E_UNSUPPORTED = 5,      /* asked for an unimplemented mode */
  QOE_E_EXTERNAL_TOOL = 6,    /* external scorer failed or timed out */
  QOE_E_RANGE = 7,            /* value outside its documented range */
  QOE_E_MODEL = 8,            /* model/feature inconsistency */
  QOE_E_INTERNAL = 9
};

QOE_API const char* qoe_version(void);

/* Message for the most recent failure on this thread; never NULL. */
QOE_API const char* qoe_last_error_message(void);

/* Short name of a status code ("ok", "io", ...). */
QOE_API const char* qoe_status_name(int status);

/* ---- Capture ingestion -------------------------------------------- */

typedef struct qoe_capture qoe_capture;

/*
 * Parses a HAR file, keeps requests matching segment_regex (NULL for
 * the built-in `\.ts(\?.*)?$`), assigns each segment the uniform
 * playback duration segment_duration_ms (0 for the 10000 ms default)
 * and computes arrival times and the stall report.
 */
QOE_API int qoe_capture_from_har(const char* har_path,
                                 const char* segment_regex,
                                 int64_t segment_duration_ms,
                                 qoe_capture** out_capture);

/* Capture interchange documents (JSON, schema "qoe-capture/1"). */
QOE_API int qoe_capture_save(const qoe_capture* capture, const char* path);
QOE_API int qoe_capture_load(const char* path, qoe_capture** out_capture);

QOE_API int qoe_capture_segment_count(const qoe_capture* capture,
                                      int64_t* out_count);
QOE_API int qoe_capture_startup_ms(const qoe_capture* capture,
                                   int64_t* out_startup_ms);
QOE_API int qoe_capture_page_load_ms(const qoe_capture* capture,
                                     int64_t* out_page_load_ms);

/*
 * Stall summary of the capture. Any output pointer may be NULL. If
 * stalling_buf is given, the dataset stalling string ("0 - 0" when
 * none) is copied into it, truncated to buf_size including the
 * terminator.
 */
QOE_API int qoe_capture_stalls(const qoe_capture* capture,
                               double* out_total_s, int64_t* out_event_count,
                               char* stalling_buf, size_t buf_size);

QOE_API void qoe_capture_free(qoe_capture* capture);

/* ---- Network profiles --------------------------------------------- */

typedef struct qoe_profiles qoe_profiles;

QOE_API int qoe_profiles_load(const char* path, qoe_profiles** out_profiles);
QOE_API int qoe_profiles_count(const qoe_profiles* profiles,
                               int64_t* out_count);
/* Name of profile `index`; NULL on bad index. Owned by the handle. */
QOE_API const char* qoe_profiles_name(const qoe_profiles* profiles,
                                      int64_t index);
QOE_API void qoe_profiles_free(qoe_profiles* profiles);

/* ---- Dataset synthesis -------------------------------------------- */

/*
 * Emulates sessions_per_profile streaming sessions over every profile
 * in profiles_path, scores each one and writes the labeled dataset to
 * out_csv_path. scorer_command NULL selects the built-in scorer; a
 * command string selects the external tool adapter. Deterministic in
 * (profiles, sessions, seed).
 */
QOE_API int qoe_synthesize_dataset(const char* profiles_path,
                                   int64_t sessions_per_profile, uint64_t seed,
                                   const char* scorer_command,
                                   const char* out_csv_path);

/* ---- Training ------------------------------------------------------ */

typedef struct qoe_train_params {
  double test_fraction;         /* default 0.2 */
  uint64_t seed;                /* split + forest seed */
  int32_t n_estimators;         /* default 600 */
  int32_t max_depth;            /* default 48 */
  double max_features_fraction; /* default 0.58 */
  int32_t min_samples_leaf;     /* default 1 */
  int32_t n_threads;            /* 0 = automatic */
} qoe_train_params;

QOE_API void qoe_train_params_init(qoe_train_params* params);

/*
 * Cleans the dataset, engineers features, fits the baseline linear
 * regression and the random forest, and writes into out_dir:
 * baseline_model.qoem, forest_model.qoem, metrics_baseline.json,
 * metrics_enhanced.json and report.txt. Byte-stable per seed.
 */
QOE_API int qoe_train_from_csv(const char* csv_path,
                               const qoe_train_params* params,
                               const char* out_dir);

/* ---- Prediction ----------------------------------------------------- */

typedef struct qoe_model qoe_model;

QOE_API int qoe_model_load(const char* path, qoe_model** out_model);

/*
 * Predicts MOS from the five network KPIs. loss_pct is a percentage
 * (10.0 means 10%). KPIs that the dataset cleaning rules would drop
 * (delay of -1000 or 0, bitrate of 0) are rejected with QOE_E_DATA.
 */
QOE_API int qoe_model_predict(const qoe_model* model, double delay_ms,
                              double bitrate_kbps, double jitter_ms,
                              double throughput_bps, double loss_pct,
                              double* out_mos);

QOE_API void qoe_model_free(qoe_model* model);

/* ---- Reporting ------------------------------------------------------ */

/*
 * Merges metrics JSON files into a CSV table (model,r2,mse,rmse,mae)
 * at out_csv_path.
 */
QOE_API int qoe_metrics_table(const char* const* metrics_paths, size_t count,
                              const char* out_csv_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QOE_QOE_H */
