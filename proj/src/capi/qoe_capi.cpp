#include "qoe/qoe.h"

#include <cstring>
#include <string>
#include <vector>

#include "core/dataset_store.hpp"
#include "core/errors.hpp"
#include "core/har_ingest.hpp"
#include "core/learner.hpp"
#include "core/net_emulator.hpp"
#include "core/pipeline.hpp"
#include "core/stall_engine.hpp"

namespace {

thread_local std::string g_last_error = "no error";

int status_of(qoe::ErrorCode code) {
  using qoe::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
      return QOE_E_INVALID_ARGUMENT;
    case ErrorCode::Io:
      return QOE_E_IO;
    case ErrorCode::MalformedHar:
    case ErrorCode::BadStallSyntax:
    case ErrorCode::ProfileSyntax:
    case ErrorCode::HeaderMismatch:
    case ErrorCode::RowParse:
    case ErrorCode::SchemaMismatch:
      return QOE_E_PARSE;
    case ErrorCode::NegativeTiming:
    case ErrorCode::NoSegmentsFound:
    case ErrorCode::MissingDurations:
    case ErrorCode::NonMonotoneArrivals:
    case ErrorCode::EmptyTrace:
    case ErrorCode::MissingDirection:
    case ErrorCode::DegenerateProfile:
    case ErrorCode::NotCleaned:
    case ErrorCode::TooFewRows:
    case ErrorCode::EmptyTrain:
    case ErrorCode::LengthMismatch:
      return QOE_E_DATA;
    case ErrorCode::UnsupportedMode:
      return QOE_E_UNSUPPORTED;
    case ErrorCode::ExternalToolFailure:
      return QOE_E_EXTERNAL_TOOL;
    case ErrorCode::OutOfRange:
      return QOE_E_RANGE;
    case ErrorCode::SingularDesign:
    case ErrorCode::FeatureMismatch:
      return QOE_E_MODEL;
    case ErrorCode::Internal:
      return QOE_E_INTERNAL;
  }
  return QOE_E_INTERNAL;
}

// Runs fn, translating exceptions into status codes + the last-error
// message; the usual body of every API function.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return QOE_OK;
  } catch (const qoe::QoeError& e) {
    g_last_error = std::string(qoe::error_code_name(e.code())) + ": " + e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = std::string("internal: ") + e.what();
    return QOE_E_INTERNAL;
  } catch (...) {
    g_last_error = "internal: unknown error";
    return QOE_E_INTERNAL;
  }
}

int invalid(const char* message) {
  g_last_error = message;
  return QOE_E_INVALID_ARGUMENT;
}

}  // namespace

struct qoe_capture {
  qoe::SessionCapture capture;
  qoe::StallReport stalls;
};

struct qoe_profiles {
  std::vector<qoe::NetworkProfile> profiles;
};

struct qoe_model {
  qoe::Model model;
};

extern "C" {

const char* qoe_version(void) { return "1.0.0"; }

const char* qoe_last_error_message(void) { return g_last_error.c_str(); }

const char* qoe_status_name(int status) {
  switch (status) {
    case QOE_OK: return "ok";
    case QOE_E_INVALID_ARGUMENT: return "invalid-argument";
    case QOE_E_IO: return "io";
    case QOE_E_PARSE: return "parse";
    case QOE_E_DATA: return "data";
    case QOE_E_UNSUPPORTED: return "unsupported";
    case QOE_E_EXTERNAL_TOOL: return "external-tool";
    case QOE_E_RANGE: return "range";
    case QOE_E_MODEL: return "model";
    case QOE_E_INTERNAL: return "internal";
  }
  return "unknown";
}

int qoe_capture_from_har(const char* har_path, const char* segment_regex,
                         int64_t segment_duration_ms,
                         qoe_capture** out_capture) {
  if (!har_path || !out_capture) {
    return invalid("qoe_capture_from_har: NULL argument");
  }
  *out_capture = nullptr;
  return guarded([&] {
    qoe::IngestOptions options;
    if (segment_regex) options.segment_pattern = segment_regex;
    if (segment_duration_ms > 0) {
      options.segment_duration_ms = segment_duration_ms;
    }
    qoe::IngestResult result = qoe::ingest_file(har_path, options);
    *out_capture = new qoe_capture{std::move(result.capture),
                                   std::move(result.stalls)};
  });
}

int qoe_capture_save(const qoe_capture* capture, const char* path) {
  if (!capture || !path) return invalid("qoe_capture_save: NULL argument");
  return guarded([&] { qoe::save_capture_json(capture->capture, path); });
}

int qoe_capture_load(const char* path, qoe_capture** out_capture) {
  if (!path || !out_capture) return invalid("qoe_capture_load: NULL argument");
  *out_capture = nullptr;
  return guarded([&] {
    qoe::SessionCapture capture = qoe::load_capture_json(path);
    qoe::StallReport stalls = qoe::detect_stalls_timeline(capture.segments, 0);
    *out_capture = new qoe_capture{std::move(capture), std::move(stalls)};
  });
}

int qoe_capture_segment_count(const qoe_capture* capture, int64_t* out_count) {
  if (!capture || !out_count) {
    return invalid("qoe_capture_segment_count: NULL argument");
  }
  *out_count = static_cast<int64_t>(capture->capture.segments.size());
  return QOE_OK;
}

int qoe_capture_startup_ms(const qoe_capture* capture,
                           int64_t* out_startup_ms) {
  if (!capture || !out_startup_ms) {
    return invalid("qoe_capture_startup_ms: NULL argument");
  }
  *out_startup_ms = capture->capture.startup_ms;
  return QOE_OK;
}

int qoe_capture_page_load_ms(const qoe_capture* capture,
                             int64_t* out_page_load_ms) {
  if (!capture || !out_page_load_ms) {
    return invalid("qoe_capture_page_load_ms: NULL argument");
  }
  *out_page_load_ms = capture->capture.page_load_ms;
  return QOE_OK;
}

int qoe_capture_stalls(const qoe_capture* capture, double* out_total_s,
                       int64_t* out_event_count, char* stalling_buf,
                       size_t buf_size) {
  if (!capture) return invalid("qoe_capture_stalls: NULL capture");
  return guarded([&] {
    if (out_total_s) *out_total_s = capture->stalls.total_s;
    if (out_event_count) {
      *out_event_count = static_cast<int64_t>(capture->stalls.events.size());
    }
    if (stalling_buf && buf_size > 0) {
      const std::string s = qoe::format_stalling_string(capture->stalls.events);
      const size_t n = std::min(buf_size - 1, s.size());
      std::memcpy(stalling_buf, s.data(), n);
      stalling_buf[n] = '\0';
    }
  });
}

void qoe_capture_free(qoe_capture* capture) { delete capture; }

int qoe_profiles_load(const char* path, qoe_profiles** out_profiles) {
  if (!path || !out_profiles) return invalid("qoe_profiles_load: NULL argument");
  *out_profiles = nullptr;
  return guarded([&] {
    *out_profiles = new qoe_profiles{qoe::parse_profiles_file(path)};
  });
}

int qoe_profiles_count(const qoe_profiles* profiles, int64_t* out_count) {
  if (!profiles || !out_count) return invalid("qoe_profiles_count: NULL argument");
  *out_count = static_cast<int64_t>(profiles->profiles.size());
  return QOE_OK;
}

const char* qoe_profiles_name(const qoe_profiles* profiles, int64_t index) {
  if (!profiles || index < 0 ||
      index >= static_cast<int64_t>(profiles->profiles.size())) {
    g_last_error = "qoe_profiles_name: index out of range";
    return nullptr;
  }
  return profiles->profiles[static_cast<size_t>(index)].name.c_str();
}

void qoe_profiles_free(qoe_profiles* profiles) { delete profiles; }

int qoe_synthesize_dataset(const char* profiles_path,
                           int64_t sessions_per_profile, uint64_t seed,
                           const char* scorer_command,
                           const char* out_csv_path) {
  if (!profiles_path || !out_csv_path) {
    return invalid("qoe_synthesize_dataset: NULL argument");
  }
  if (sessions_per_profile < 0) {
    return invalid("qoe_synthesize_dataset: negative session count");
  }
  return guarded([&] {
    qoe::SynthesizeOptions options;
    options.sessions_per_profile = sessions_per_profile;
    options.seed = seed;
    if (scorer_command && scorer_command[0]) {
      options.scorer.backend = qoe::ScorerBackend::kExternal;
      options.scorer.external_command = scorer_command;
    }
    const std::vector<qoe::NetworkProfile> profiles =
        qoe::parse_profiles_file(profiles_path);
    const qoe::Dataset dataset = qoe::synthesize(profiles, options);
    qoe::save_csv(dataset, out_csv_path);
  });
}

void qoe_train_params_init(qoe_train_params* params) {
  if (!params) return;
  params->test_fraction = 0.2;
  params->seed = 0;
  params->n_estimators = 600;
  params->max_depth = 48;
  params->max_features_fraction = 0.58;
  params->min_samples_leaf = 1;
  params->n_threads = 0;
}

int qoe_train_from_csv(const char* csv_path, const qoe_train_params* params,
                       const char* out_dir) {
  if (!csv_path || !params || !out_dir) {
    return invalid("qoe_train_from_csv: NULL argument");
  }
  return guarded([&] {
    qoe::TrainOptions options;
    options.test_fraction = params->test_fraction;
    options.forest.seed = params->seed;
    options.forest.n_estimators = params->n_estimators;
    options.forest.max_depth = params->max_depth;
    options.forest.max_features_fraction = params->max_features_fraction;
    options.forest.min_samples_leaf = params->min_samples_leaf;
    options.forest.n_threads = params->n_threads;
    const qoe::Dataset dataset = qoe::load_csv(csv_path);
    qoe::train_models(dataset, options, out_dir);
  });
}

int qoe_model_load(const char* path, qoe_model** out_model) {
  if (!path || !out_model) return invalid("qoe_model_load: NULL argument");
  *out_model = nullptr;
  return guarded([&] { *out_model = new qoe_model{qoe::load_model(path)}; });
}

int qoe_model_predict(const qoe_model* model, double delay_ms,
                      double bitrate_kbps, double jitter_ms,
                      double throughput_bps, double loss_pct,
                      double* out_mos) {
  if (!model || !out_mos) return invalid("qoe_model_predict: NULL argument");
  return guarded([&] {
    *out_mos = qoe::predict_mos(model->model, delay_ms, bitrate_kbps,
                                jitter_ms, throughput_bps, loss_pct);
  });
}

void qoe_model_free(qoe_model* model) { delete model; }

int qoe_metrics_table(const char* const* metrics_paths, size_t count,
                      const char* out_csv_path) {
  if (!metrics_paths || count == 0 || !out_csv_path) {
    return invalid("qoe_metrics_table: need at least one metrics file");
  }
  return guarded([&] {
    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      const std::string path = metrics_paths[i];
      std::string stem = path;
      const size_t slash = stem.find_last_of('/');
      if (slash != std::string::npos) stem = stem.substr(slash + 1);
      const size_t dot = stem.find_last_of('.');
      if (dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
      docs.emplace_back(stem, qoe::read_text_file(path));
    }
    qoe::write_text_file(out_csv_path, qoe::metrics_table_csv(docs));
  });
}

}  // extern "C"
