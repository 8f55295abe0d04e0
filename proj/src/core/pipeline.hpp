#ifndef QOE_CORE_PIPELINE_HPP
#define QOE_CORE_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/dataset_store.hpp"
#include "core/har_ingest.hpp"
#include "core/learner.hpp"
#include "core/net_emulator.hpp"
#include "core/quality_model.hpp"
#include "core/stall_engine.hpp"

namespace qoe {

struct IngestOptions {
  std::string segment_pattern = kDefaultSegmentPattern;
  int64_t segment_duration_ms = kDefaultSegmentDurationMs;
  std::vector<int64_t> manifest_durations_ms;  // overrides uniform fill
};

struct IngestResult {
  SessionCapture capture;
  StallReport stalls;
  std::vector<std::string> warnings;
};

// HAR file -> capture with durations filled -> stall report.
IngestResult ingest_file(const std::string& har_path,
                         const IngestOptions& options);

// The synthetic media ladder used for dataset generation, spanning the
// resolutions and bitrates observed in the reference corpus.
struct LadderRung {
  int width;
  int height;
  double bitrate_kbps;
};
const std::vector<LadderRung>& media_ladder();

struct SynthesizeOptions {
  int64_t sessions_per_profile = 0;
  uint64_t seed = 0;
  ScorerConfig scorer;  // surrogate unless an external command is set
};

// Emulates sessions_per_profile sessions over each profile and labels
// them with the scorer's MOS. The extra column "profile" records the
// originating profile name. Deterministic for a fixed seed.
Dataset synthesize(const std::vector<NetworkProfile>& profiles,
                   const SynthesizeOptions& options);

struct TrainOptions {
  double test_fraction = 0.2;
  ForestParams forest;  // forest.seed doubles as the split seed
};

struct ModelReport {
  std::string name;
  EvalMetrics raw;         // on the MOS scale
  EvalMetrics normalized;  // on min-max normalized targets (train range)
  int64_t clamped = 0;
  size_t n_features = 0;
};

struct TrainResult {
  ModelReport baseline;  // linear regression on the five raw KPIs
  ModelReport enhanced;  // random forest on the engineered features
  CleanCounts cleaning;
  size_t n_train = 0;
  size_t n_test = 0;
  std::string baseline_model_path;
  std::string forest_model_path;
  std::string baseline_metrics_path;
  std::string enhanced_metrics_path;
  std::string report_path;
};

// clean -> engineer -> split -> fit both models -> evaluate, writing
// model files, metrics JSON and a two-block comparison report into
// out_dir. Outputs are byte-stable for fixed inputs and seed.
TrainResult train_models(const Dataset& dataset, const TrainOptions& options,
                         const std::string& out_dir);

// Five KPIs -> engineered row -> model prediction.
double predict_mos(const Model& model, double delay_ms, double bitrate_kbps,
                   double jitter_ms, double throughput_bps, double loss_pct);

// Merges metrics JSON documents into a model x {r2, mse, rmse, mae}
// CSV. Each document needs the four metric keys; "model" defaults to
// the given fallback name (usually the file stem).
std::string metrics_table_csv(
    const std::vector<std::pair<std::string, std::string>>& named_docs);

}  // namespace qoe

#endif  // QOE_CORE_PIPELINE_HPP
