#include "core/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/feature_lab.hpp"
#include "core/rng.hpp"

namespace qoe {

using nlohmann::ordered_json;

IngestResult ingest_file(const std::string& har_path,
                         const IngestOptions& options) {
  IngestResult result;
  ParsedHar har = parse_har_file(har_path);
  result.warnings = har.warnings;

  std::vector<SegmentTiming> segments =
      extract_segments(har.entries, options.segment_pattern);
  if (!options.manifest_durations_ms.empty()) {
    fill_manifest_durations(segments, options.manifest_durations_ms);
  } else {
    fill_uniform_durations(segments, options.segment_duration_ms);
  }
  result.capture = make_capture(har, std::move(segments), har_path);
  // capture.startup_ms is the pre-arrival wait; the detector's startup
  // parameter models post-arrival spin-up, which a HAR cannot show.
  result.stalls = detect_stalls_timeline(result.capture.segments, 0);
  return result;
}

const std::vector<LadderRung>& media_ladder() {
  static const std::vector<LadderRung> kLadder = {
      {264, 146, 150},  {426, 240, 250}, {640, 360, 400},
      {854, 480, 550},  {1066, 600, 680}, {1280, 720, 820},
  };
  return kLadder;
}

namespace {

constexpr double kSegmentSeconds = 10.0;
constexpr int kFpsChoices[] = {24, 25, 30};

struct SessionDraw {
  std::vector<SegmentMedia> media;
  int fps = 0;
  const LadderRung* rung = nullptr;
};

// The player's rung choice: the highest bitrate not exceeding the
// session's bandwidth estimate, which wanders around the true capacity.
SessionDraw draw_session(const NetworkProfile& profile, Rng& rng) {
  SessionDraw draw;
  const int n_segments = static_cast<int>(rng.uniform_int(4, 6));
  draw.fps = kFpsChoices[rng.uniform_int(0, 2)];
  const double eff_kbps = static_cast<double>(profile.incoming.rate_bps) *
                          (1.0 - profile.incoming.loss_pct / 100.0) / 1000.0;
  const double estimate_kbps = eff_kbps * rng.uniform(0.35, 1.45);

  const auto& ladder = media_ladder();
  draw.rung = &ladder.front();
  for (const auto& rung : ladder) {
    if (rung.bitrate_kbps <= estimate_kbps) draw.rung = &rung;
  }

  SegmentMedia media;
  media.bitrate_kbps = draw.rung->bitrate_kbps;
  media.width = draw.rung->width;
  media.height = draw.rung->height;
  media.framerate_fps = draw.fps;
  media.duration_s = kSegmentSeconds;
  draw.media.assign(static_cast<size_t>(n_segments), media);
  return draw;
}

double score_session(const std::vector<SegmentMedia>& media,
                     const StallReport& stalls, const ScorerConfig& scorer,
                     uint64_t session_tag) {
  if (scorer.backend == ScorerBackend::kSurrogate) {
    return mos_from_scores(score_surrogate(media, stalls, scorer.mode));
  }
  namespace fs = std::filesystem;
  const fs::path spec_path =
      fs::temp_directory_path() /
      ("qoe-spec-" + std::to_string(::getpid()) + "-" +
       std::to_string(session_tag) + ".json");
  write_text_file(spec_path.string(), mode0_spec_to_json(media, stalls));
  QualityScores scores;
  try {
    scores = score_external({spec_path.string()}, scorer);
  } catch (...) {
    std::error_code ec;
    fs::remove(spec_path, ec);
    throw;
  }
  std::error_code ec;
  fs::remove(spec_path, ec);
  return mos_from_scores(scores);
}

}  // namespace

Dataset synthesize(const std::vector<NetworkProfile>& profiles,
                   const SynthesizeOptions& options) {
  if (options.sessions_per_profile < 0) {
    fail(ErrorCode::InvalidArgument, "sessions_per_profile must be >= 0");
  }
  Dataset dataset;
  dataset.extra_columns = {"profile"};

  for (size_t pi = 0; pi < profiles.size(); ++pi) {
    const NetworkProfile& profile = profiles[pi];
    for (int64_t s = 0; s < options.sessions_per_profile; ++s) {
      const uint64_t purpose =
          (static_cast<uint64_t>(pi) << 32) | static_cast<uint64_t>(s);
      const uint64_t session_seed = Rng::derive(options.seed, purpose);

      Rng media_rng(Rng::derive(session_seed, 0));
      const SessionDraw draw = draw_session(profile, media_rng);
      auto [segments, kpi] =
          simulate_session(profile, draw.media, Rng::derive(session_seed, 1));
      const StallReport stalls = detect_stalls_timeline(segments, 0);
      const double mos =
          score_session(draw.media, stalls, options.scorer, purpose);

      SessionRecord r;
      r.mos_x100 = encode_mos(mos);
      r.loss_x100 = std::llround(kpi.packet_loss_pct * 100.0);
      r.jitter_ms = std::llround(kpi.jitter_ms);
      r.delay_ms = std::llround(kpi.delay_ms);
      r.bitrate_kbps = std::llround(kpi.bitrate_kbps);
      r.throughput_bps = std::llround(kpi.throughput_bps);
      r.rebuffering_ms = std::llround(stalls.total_s * 1000.0);
      r.startup_ms = segments.front().t_seg_ms;
      r.buffering_ms = r.startup_ms + r.rebuffering_ms;
      r.framerate_x100 = draw.fps * 100;
      r.duration_ms = std::llround(kSegmentSeconds * 1000.0) *
                      static_cast<int64_t>(draw.media.size());
      r.stalling = format_stalling_string(stalls.events);
      r.vheight = draw.rung->height;
      r.vwidth = draw.rung->width;
      r.extras = {profile.name};
      dataset.records.push_back(std::move(r));
    }
  }
  return dataset;
}

namespace {

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

ordered_json metrics_json(const ModelReport& report, const TrainResult& run,
                          const TrainOptions& options,
                          const std::vector<std::string>& features) {
  ordered_json doc;
  doc["schema"] = "qoe-metrics/1";
  doc["model"] = report.name;
  doc["features"] = features;
  doc["seed"] = options.forest.seed;
  doc["test_fraction"] = options.test_fraction;
  doc["n_train"] = run.n_train;
  doc["n_test"] = run.n_test;
  doc["clamped_predictions"] = report.clamped;
  doc["mse"] = report.raw.mse;
  doc["rmse"] = report.raw.rmse;
  doc["r2"] = report.raw.degenerate_target ? ordered_json(nullptr)
                                           : ordered_json(report.raw.r2);
  doc["mae"] = report.raw.mae;
  ordered_json norm;
  norm["mse"] = report.normalized.mse;
  norm["rmse"] = report.normalized.rmse;
  norm["r2"] = report.normalized.degenerate_target
                   ? ordered_json(nullptr)
                   : ordered_json(report.normalized.r2);
  norm["mae"] = report.normalized.mae;
  doc["normalized_mos"] = std::move(norm);
  return doc;
}

void append_report_block(std::string* out, const char* title,
                         const ModelReport& r) {
  *out += title;
  *out += "\n";
  *out += "  MSE: " + format_metric(r.raw.mse) + "\n";
  *out += "  RMSE: " + format_metric(r.raw.rmse) + "\n";
  *out += "  R-squared: " +
          (r.raw.degenerate_target ? std::string("undefined (constant target)")
                                   : format_metric(r.raw.r2)) +
          "\n";
  *out += "  MAE: " + format_metric(r.raw.mae) + "\n";
  *out += "  normalized MOS -> MSE: " + format_metric(r.normalized.mse) +
          ", RMSE: " + format_metric(r.normalized.rmse) + ", R-squared: " +
          (r.normalized.degenerate_target ? std::string("undefined")
                                          : format_metric(r.normalized.r2)) +
          ", MAE: " + format_metric(r.normalized.mae) + "\n";
}

// Min-max normalization of targets/predictions by the train target
// range, for reporting on a dimensionless scale alongside raw MOS.
EvalMetrics normalized_metrics(const std::vector<double>& predictions,
                               const std::vector<double>& targets,
                               double train_min, double train_max) {
  if (train_max <= train_min) {
    EvalMetrics m;
    m.degenerate_target = true;
    return m;
  }
  const double span = train_max - train_min;
  std::vector<double> p(predictions.size()), t(targets.size());
  for (size_t i = 0; i < predictions.size(); ++i) {
    p[i] = (predictions[i] - train_min) / span;
    t[i] = (targets[i] - train_min) / span;
  }
  return evaluate(p, t);
}

}  // namespace

TrainResult train_models(const Dataset& dataset, const TrainOptions& options,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  constexpr uint64_t kSplitPurpose = 0x511737;
  const CleanDataset cleaned = clean(dataset.records);
  const FeatureMatrix engineered = engineer(cleaned);
  auto [train, test] = split(engineered, options.test_fraction,
                             Rng::derive(options.forest.seed, kSplitPurpose));

  TrainResult result;
  result.cleaning = cleaned.provenance;
  result.n_train = train.n_rows();
  result.n_test = test.n_rows();

  double train_min = train.target.front(), train_max = train.target.front();
  for (const double t : train.target) {
    train_min = std::min(train_min, t);
    train_max = std::max(train_max, t);
  }

  // Baseline: linear regression on the five raw KPIs.
  const FeatureMatrix base_train = select_features(train, base_feature_names());
  const FeatureMatrix base_test = select_features(test, base_feature_names());
  const LinearModel linear = fit_linear(base_train);
  result.baseline.name = "linear_regression";
  result.baseline.n_features = base_train.n_features();
  {
    const std::vector<double> predictions =
        predict(linear, base_test, &result.baseline.clamped);
    result.baseline.raw = evaluate(predictions, base_test.target);
    result.baseline.normalized = normalized_metrics(
        predictions, base_test.target, train_min, train_max);
  }

  // Enhanced: the forest on all engineered features.
  const ForestModel forest = fit_forest(train, options.forest);
  result.enhanced.name = "random_forest";
  result.enhanced.n_features = train.n_features();
  {
    const std::vector<double> predictions =
        predict(forest, test, &result.enhanced.clamped);
    result.enhanced.raw = evaluate(predictions, test.target);
    result.enhanced.normalized =
        normalized_metrics(predictions, test.target, train_min, train_max);
  }

  const fs::path dir(out_dir);
  result.baseline_model_path = (dir / "baseline_model.qoem").string();
  result.forest_model_path = (dir / "forest_model.qoem").string();
  result.baseline_metrics_path = (dir / "metrics_baseline.json").string();
  result.enhanced_metrics_path = (dir / "metrics_enhanced.json").string();
  result.report_path = (dir / "report.txt").string();

  Model baseline_model;
  baseline_model.kind = Model::Kind::kLinear;
  baseline_model.linear = linear;
  save_model(baseline_model, result.baseline_model_path);

  Model forest_model;
  forest_model.kind = Model::Kind::kForest;
  forest_model.forest = forest;
  save_model(forest_model, result.forest_model_path);

  write_text_file(
      result.baseline_metrics_path,
      metrics_json(result.baseline, result, options, base_feature_names())
              .dump(2) +
          "\n");
  write_text_file(
      result.enhanced_metrics_path,
      metrics_json(result.enhanced, result, options, all_feature_names())
              .dump(2) +
          "\n");

  std::string report;
  report += "Model comparison\n";
  report += "================\n";
  report += "rows: " + std::to_string(cleaned.provenance.loaded) +
            " loaded, " + std::to_string(cleaned.records.size()) +
            " after cleaning (dropped " +
            std::to_string(cleaned.provenance.dropped_delay) + " by delay, " +
            std::to_string(cleaned.provenance.dropped_bitrate) +
            " by bitrate; " +
            std::to_string(cleaned.provenance.jitter_adjusted) +
            " jitter values adjusted)\n";
  report += "split: " + std::to_string(result.n_train) + " train / " +
            std::to_string(result.n_test) + " test (seed " +
            std::to_string(options.forest.seed) + ")\n\n";
  append_report_block(&report,
                      "Baseline model: linear regression on "
                      "delay, bitrate, jitter, throughput, packet_loss",
                      result.baseline);
  report += "\n";
  append_report_block(&report,
                      "Enhanced model: random forest on engineered features",
                      result.enhanced);
  write_text_file(result.report_path, report);
  return result;
}

double predict_mos(const Model& model, double delay_ms, double bitrate_kbps,
                   double jitter_ms, double throughput_bps, double loss_pct) {
  const std::vector<double> engineered = engineer_single(
      delay_ms, bitrate_kbps, jitter_ms, throughput_bps, loss_pct);
  const auto& names = all_feature_names();
  std::vector<double> row;
  row.reserve(model.feature_names().size());
  for (const auto& feature : model.feature_names()) {
    auto it = std::find(names.begin(), names.end(), feature);
    if (it == names.end()) {
      fail(ErrorCode::FeatureMismatch,
           "model feature \"" + feature + "\" is not derivable from KPIs");
    }
    row.push_back(engineered[static_cast<size_t>(it - names.begin())]);
  }
  return predict_row(model, row);
}

std::string metrics_table_csv(
    const std::vector<std::pair<std::string, std::string>>& named_docs) {
  if (named_docs.empty()) {
    fail(ErrorCode::InvalidArgument, "no metrics documents given");
  }
  std::string out = "model,r2,mse,rmse,mae\n";
  for (const auto& [fallback_name, text] : named_docs) {
    ordered_json doc;
    try {
      doc = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
      fail(ErrorCode::SchemaMismatch,
           fallback_name + ": not valid JSON: " + e.what());
    }
    if (!doc.is_object()) {
      fail(ErrorCode::SchemaMismatch, fallback_name + ": not a JSON object");
    }
    std::string model = doc.value("model", fallback_name);
    std::string row = csv_escape(model);
    for (const char* key : {"r2", "mse", "rmse", "mae"}) {
      if (!doc.contains(key) || !doc[key].is_number()) {
        fail(ErrorCode::SchemaMismatch,
             fallback_name + ": missing numeric \"" + std::string(key) + "\"");
      }
      row += "," + format_metric(doc[key].get<double>());
    }
    out += row + "\n";
  }
  return out;
}

}  // namespace qoe
