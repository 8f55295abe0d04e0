#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "core/dataset_store.hpp"
#include "core/errors.hpp"
#include "core/feature_lab.hpp"
#include "core/har_ingest.hpp"
#include "core/learner.hpp"
#include "core/net_emulator.hpp"
#include "core/pipeline.hpp"
#include "core/stall_engine.hpp"
#include "support/test_util.hpp"

using namespace qoe;
using qoe::testing::TempDir;
using qoe::testing::data_path;

namespace {

bool fails_with(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const QoeError& e) {
    return e.code() == code;
  }
  return false;
}

Dataset quick_synth(int64_t sessions, uint64_t seed) {
  const auto profiles = parse_profiles_file(data_path("profiles.txt"));
  SynthesizeOptions opts;
  opts.sessions_per_profile = sessions;
  opts.seed = seed;
  return synthesize(profiles, opts);
}

}  // namespace

TEST_CASE("ingest_file builds a capture and stall report") {
  IngestResult r = ingest_file(data_path("sample.har"), IngestOptions{});
  CHECK(r.warnings.empty());
  REQUIRE(r.capture.segments.size() == 4);
  CHECK(r.capture.startup_ms == 2000);
  CHECK(r.capture.page_load_ms == 1800);
  CHECK(r.capture.source_path == data_path("sample.har"));
  for (const auto& seg : r.capture.segments) {
    CHECK(seg.duration_ms == kDefaultSegmentDurationMs);
  }
  REQUIRE(r.stalls.events.size() == 1);
  CHECK(r.stalls.events[0].start_s == doctest::Approx(20.0));
  CHECK(r.stalls.events[0].duration_s == doctest::Approx(3.0));
  CHECK(r.stalls.total_s == doctest::Approx(3.0));
}

TEST_CASE("ingest_file honours manifest durations and custom patterns") {
  IngestOptions opts;
  opts.manifest_durations_ms = {10000, 10000, 10000, 4500};
  IngestResult r = ingest_file(data_path("sample.har"), opts);
  REQUIRE(r.capture.segments.size() == 4);
  CHECK(r.capture.segments[3].duration_ms == 4500);
  // The shorter tail segment does not change the one observed stall.
  REQUIRE(r.stalls.events.size() == 1);
  CHECK(r.stalls.events[0].start_s == doctest::Approx(20.0));

  IngestOptions narrow;
  narrow.segment_pattern = R"(seg-00[12]\.ts)";
  IngestResult two = ingest_file(data_path("sample.har"), narrow);
  CHECK(two.capture.segments.size() == 2);

  IngestResult coerced = ingest_file(data_path("coerced.har"), IngestOptions{});
  CHECK(!coerced.warnings.empty());

  CHECK(fails_with(ErrorCode::Io, [] {
    ingest_file("/no/such/capture.har", IngestOptions{});
  }));
}

TEST_CASE("media ladder is the fixed six-rung table") {
  const auto& ladder = media_ladder();
  REQUIRE(ladder.size() == 6);
  CHECK(ladder[0].width == 264);
  CHECK(ladder[0].height == 146);
  CHECK(ladder[0].bitrate_kbps == 150);
  CHECK(ladder[2].width == 640);
  CHECK(ladder[2].height == 360);
  CHECK(ladder[2].bitrate_kbps == 400);
  CHECK(ladder[5].width == 1280);
  CHECK(ladder[5].height == 720);
  CHECK(ladder[5].bitrate_kbps == 820);
  for (size_t i = 1; i < ladder.size(); ++i) {
    CHECK(ladder[i].bitrate_kbps > ladder[i - 1].bitrate_kbps);
    CHECK(ladder[i].width > ladder[i - 1].width);
  }
}

TEST_CASE("synthesize labels every profile's sessions") {
  const auto profiles = parse_profiles_file(data_path("profiles.txt"));
  REQUIRE(profiles.size() == 6);
  SynthesizeOptions opts;
  opts.sessions_per_profile = 3;
  opts.seed = 99;
  const Dataset ds = synthesize(profiles, opts);

  CHECK(ds.extra_columns == std::vector<std::string>{"profile"});
  REQUIRE(ds.records.size() == 18);

  std::set<double> ladder_bitrates;
  std::set<int64_t> ladder_heights;
  for (const auto& rung : media_ladder()) {
    ladder_bitrates.insert(rung.bitrate_kbps);
    ladder_heights.insert(rung.height);
  }

  for (size_t i = 0; i < ds.records.size(); ++i) {
    const SessionRecord& r = ds.records[i];
    REQUIRE(r.extras.size() == 1);
    CHECK(r.extras[0] == profiles[i / 3].name);

    CHECK(r.mos_x100 >= 100);
    CHECK(r.mos_x100 <= 500);
    CHECK(ladder_bitrates.count(static_cast<double>(r.bitrate_kbps)) == 1);
    CHECK(ladder_heights.count(r.vheight) == 1);
    CHECK((r.duration_ms == 40000 || r.duration_ms == 50000 ||
           r.duration_ms == 60000));
    CHECK((r.framerate_x100 == 2400 || r.framerate_x100 == 2500 ||
           r.framerate_x100 == 3000));
    CHECK(r.delay_ms > 0);
    CHECK(r.throughput_bps > 0);
    CHECK(r.startup_ms > 0);
    CHECK(r.buffering_ms == r.startup_ms + r.rebuffering_ms);

    const auto events = parse_stalling_string(r.stalling);
    CHECK((r.rebuffering_ms > 0) == !events.empty());
  }

  // The uncontended profile streams the top rung without stalling.
  for (size_t i = 0; i < 3; ++i) {
    const SessionRecord& r = ds.records[i];
    CHECK(r.extras[0] == "Good 4G");
    CHECK(r.bitrate_kbps == 820);
    CHECK(r.vwidth == 1280);
    CHECK(r.rebuffering_ms == 0);
    CHECK(r.stalling == "0 - 0");
    CHECK(r.mos_x100 > 400);
  }
}

TEST_CASE("synthesize is deterministic per seed") {
  TempDir tmp("pipe-synth");
  const Dataset a = quick_synth(4, 1234);
  const Dataset b = quick_synth(4, 1234);
  CHECK(a.records == b.records);

  const std::string pa = tmp.file("a.csv");
  const std::string pb = tmp.file("b.csv");
  save_csv(a, pa);
  save_csv(b, pb);
  CHECK(read_text_file(pa) == read_text_file(pb));

  const Dataset c = quick_synth(4, 1235);
  CHECK(a.records != c.records);

  // CSV persistence is lossless for synthesized data.
  const Dataset back = load_csv(pa);
  CHECK(back.records == a.records);
  CHECK(back.extra_columns == a.extra_columns);
}

TEST_CASE("synthesize edge cases") {
  const auto profiles = parse_profiles_file(data_path("profiles.txt"));
  SynthesizeOptions none;
  none.sessions_per_profile = 0;
  const Dataset empty = synthesize(profiles, none);
  CHECK(empty.records.empty());
  CHECK(empty.extra_columns == std::vector<std::string>{"profile"});

  const Dataset no_profiles = synthesize({}, none);
  CHECK(no_profiles.records.empty());

  SynthesizeOptions bad;
  bad.sessions_per_profile = -1;
  CHECK(fails_with(ErrorCode::InvalidArgument,
                   [&] { synthesize(profiles, bad); }));
}

TEST_CASE("synthesize can label through an external scorer") {
  const auto profiles = parse_profiles_file(data_path("profiles.txt"));
  SynthesizeOptions opts;
  opts.sessions_per_profile = 2;
  opts.seed = 7;
  opts.scorer.backend = ScorerBackend::kExternal;
  // Ignore the spec path argument; emit a fixed score document.
  opts.scorer.external_command = "cat " + data_path("scorer_echo.json") + " #";

  const Dataset ds = synthesize({profiles[0], profiles[1]}, opts);
  REQUIRE(ds.records.size() == 4);
  for (const auto& r : ds.records) {
    CHECK(r.mos_x100 == 420);  // the echoed document's O46
  }

  SynthesizeOptions broken = opts;
  broken.scorer.external_command = "exit 3 #";
  CHECK(fails_with(ErrorCode::ExternalToolFailure, [&] {
    synthesize({profiles[0]}, broken);
  }));
}

TEST_CASE("train_models fits, evaluates and writes artifacts") {
  TempDir tmp("pipe-train");
  const Dataset ds = quick_synth(50, 2024);  // 300 rows
  REQUIRE(ds.records.size() == 300);

  TrainOptions opts;
  opts.test_fraction = 0.2;
  opts.forest.n_estimators = 40;
  opts.forest.max_depth = 14;
  opts.forest.seed = 7;
  opts.forest.n_threads = 2;

  const std::string out_dir = tmp.path() + "/run1";
  const TrainResult result = train_models(ds, opts, out_dir);

  CHECK(result.cleaning.loaded == 300);
  CHECK(result.cleaning.dropped_delay == 0);
  CHECK(result.cleaning.dropped_bitrate == 0);
  CHECK(result.n_train + result.n_test == 300);
  CHECK(result.n_test == 60);

  CHECK(result.baseline.name == "linear_regression");
  CHECK(result.baseline.n_features == 5);
  CHECK(result.enhanced.name == "random_forest");
  CHECK(result.enhanced.n_features == 11);

  // The forest must beat the line on held-out data for this corpus.
  CHECK(result.enhanced.raw.r2 > 0.6);
  CHECK(result.enhanced.raw.r2 > result.baseline.raw.r2);
  CHECK(result.enhanced.raw.rmse ==
        doctest::Approx(std::sqrt(result.enhanced.raw.mse)).epsilon(1e-12));
  CHECK(result.baseline.raw.mse >= 0.0);

  // Artifacts land where the result says they do.
  const Model baseline = load_model(result.baseline_model_path);
  CHECK(baseline.kind == Model::Kind::kLinear);
  CHECK(baseline.linear.feature_names == base_feature_names());
  const Model forest = load_model(result.forest_model_path);
  CHECK(forest.kind == Model::Kind::kForest);
  CHECK(forest.forest.feature_names == all_feature_names());
  CHECK(forest.forest.trees.size() == 40);

  const std::string report = read_text_file(result.report_path);
  CHECK(report.find("Model comparison") != std::string::npos);
  CHECK(report.find("Baseline model: linear regression") != std::string::npos);
  CHECK(report.find("Enhanced model: random forest") != std::string::npos);
  CHECK(report.find(std::to_string(result.n_train) + " train") !=
        std::string::npos);
}

TEST_CASE("train metrics JSON follows the schema") {
  TempDir tmp("pipe-json");
  const Dataset ds = quick_synth(20, 5);  // 120 rows

  TrainOptions opts;
  opts.forest.n_estimators = 15;
  opts.forest.max_depth = 10;
  opts.forest.seed = 11;
  const TrainResult result = train_models(ds, opts, tmp.path() + "/out");

  for (const bool enhanced : {false, true}) {
    const std::string text = read_text_file(
        enhanced ? result.enhanced_metrics_path : result.baseline_metrics_path);
    const auto doc = nlohmann::json::parse(text);
    CHECK(doc.at("schema") == "qoe-metrics/1");
    CHECK(doc.at("model") ==
          (enhanced ? "random_forest" : "linear_regression"));
    CHECK(doc.at("features").size() == static_cast<size_t>(enhanced ? 11 : 5));
    CHECK(doc.at("seed").get<uint64_t>() == 11);
    CHECK(doc.at("test_fraction").get<double>() == doctest::Approx(0.2));
    CHECK(doc.at("n_train").get<size_t>() == result.n_train);
    CHECK(doc.at("n_test").get<size_t>() == result.n_test);
    CHECK(doc.at("mse").is_number());
    CHECK(doc.at("rmse").get<double>() ==
          doctest::Approx(std::sqrt(doc.at("mse").get<double>())));
    CHECK(doc.at("r2").is_number());
    CHECK(doc.at("mae").get<double>() >= 0.0);
    CHECK(doc.at("clamped_predictions").is_number_integer());
    const auto& norm = doc.at("normalized_mos");
    for (const char* key : {"mse", "rmse", "r2", "mae"}) {
      CHECK(norm.contains(key));
    }
    // Normalization divides by the train target span, so the scaled
    // RMSE exceeds the raw one whenever that span is above 1.
    CHECK(norm.at("rmse").is_number());
  }
}

TEST_CASE("train_models is byte-deterministic") {
  TempDir tmp("pipe-det");
  const Dataset ds = quick_synth(15, 77);  // 90 rows

  TrainOptions opts;
  opts.forest.n_estimators = 12;
  opts.forest.max_depth = 10;
  opts.forest.seed = 3;
  opts.forest.n_threads = 3;

  const TrainResult a = train_models(ds, opts, tmp.path() + "/a");
  TrainOptions serial = opts;
  serial.forest.n_threads = 1;
  const TrainResult b = train_models(ds, serial, tmp.path() + "/b");

  CHECK(read_text_file(a.baseline_model_path) ==
        read_text_file(b.baseline_model_path));
  CHECK(read_text_file(a.forest_model_path) ==
        read_text_file(b.forest_model_path));
  CHECK(read_text_file(a.baseline_metrics_path) ==
        read_text_file(b.baseline_metrics_path));
  CHECK(read_text_file(a.enhanced_metrics_path) ==
        read_text_file(b.enhanced_metrics_path));
  CHECK(read_text_file(a.report_path) == read_text_file(b.report_path));

  TrainOptions reseeded = opts;
  reseeded.forest.seed = 4;
  const TrainResult c = train_models(ds, reseeded, tmp.path() + "/c");
  CHECK(read_text_file(a.forest_model_path) !=
        read_text_file(c.forest_model_path));
}

TEST_CASE("train_models rejects datasets that cannot be split") {
  TempDir tmp("pipe-tiny");
  Dataset tiny = quick_synth(1, 9);
  tiny.records.resize(4);
  CHECK(fails_with(ErrorCode::TooFewRows, [&] {
    train_models(tiny, TrainOptions{}, tmp.path() + "/out");
  }));
}

TEST_CASE("predict_mos maps KPIs through a model's feature names") {
  Model linear;
  linear.kind = Model::Kind::kLinear;
  linear.linear.feature_names = {"bitrate"};
  linear.linear.coefficients = {0.001};
  linear.linear.intercept = 1.0;
  CHECK(predict_mos(linear, 50, 400, 10, 1e6, 2.0) ==
        doctest::Approx(1.4).epsilon(1e-12));

  // Single-tree forest splitting on bitrate at 500 kbps.
  Model forest;
  forest.kind = Model::Kind::kForest;
  forest.forest.feature_names = all_feature_names();
  Tree tree;
  tree.nodes.resize(3);
  tree.nodes[0].feature = 1;  // bitrate
  tree.nodes[0].threshold = 500.0;
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[0].n = 4;
  tree.nodes[1].value = 3.0;
  tree.nodes[1].n = 2;
  tree.nodes[2].value = 4.5;
  tree.nodes[2].n = 2;
  forest.forest.trees = {tree};

  CHECK(predict_mos(forest, 50, 400, 10, 1e6, 2.0) == 3.0);
  CHECK(predict_mos(forest, 50, 600, 10, 1e6, 2.0) == 4.5);

  // Jitter 0 is adjusted to 1 before feature lookup.
  Model jitter_split = forest;
  jitter_split.forest.trees[0].nodes[0].feature = 2;  // jitter
  jitter_split.forest.trees[0].nodes[0].threshold = 0.5;
  CHECK(predict_mos(jitter_split, 50, 400, 0, 1e6, 2.0) == 4.5);
  CHECK(predict_mos(jitter_split, 50, 400, 0.2, 1e6, 2.0) == 3.0);

  CHECK(fails_with(ErrorCode::NotCleaned,
                   [&] { predict_mos(linear, 0, 400, 10, 1e6, 2.0); }));
  CHECK(fails_with(ErrorCode::NotCleaned,
                   [&] { predict_mos(linear, 50, 0, 10, 1e6, 2.0); }));

  Model unknown = linear;
  unknown.linear.feature_names = {"nonexistent_feature"};
  CHECK(fails_with(ErrorCode::FeatureMismatch,
                   [&] { predict_mos(unknown, 50, 400, 10, 1e6, 2.0); }));
}

TEST_CASE("predict_mos agrees with a trained model's direct prediction") {
  TempDir tmp("pipe-predict");
  const Dataset ds = quick_synth(20, 31);
  TrainOptions opts;
  opts.forest.n_estimators = 10;
  opts.forest.max_depth = 8;
  opts.forest.seed = 13;
  const TrainResult result = train_models(ds, opts, tmp.path() + "/out");
  const Model model = load_model(result.forest_model_path);

  const SessionRecord& r = ds.records[0];
  const double via_pipeline = predict_mos(
      model, static_cast<double>(r.delay_ms),
      static_cast<double>(r.bitrate_kbps), static_cast<double>(r.jitter_ms),
      static_cast<double>(r.throughput_bps),
      static_cast<double>(r.loss_x100) / 100.0);
  const std::vector<double> row = engineer_single(
      static_cast<double>(r.delay_ms), static_cast<double>(r.bitrate_kbps),
      static_cast<double>(r.jitter_ms), static_cast<double>(r.throughput_bps),
      static_cast<double>(r.loss_x100) / 100.0);
  CHECK(via_pipeline == predict_row(model, row));
  CHECK(via_pipeline >= 1.0);
  CHECK(via_pipeline <= 5.0);
}

TEST_CASE("metrics_table_csv merges documents exactly") {
  const std::string csv = metrics_table_csv(
      {{"metrics_linreg_ref", read_text_file(data_path("metrics_linreg_ref.json"))},
       {"metrics_rf_ref", read_text_file(data_path("metrics_rf_ref.json"))}});
  CHECK(csv ==
        "model,r2,mse,rmse,mae\n"
        "linear_regression,0.6252,2.8306e-05,0.0053,0.0039\n"
        "random_forest,0.9589,3.1047e-06,0.0018,0.0012\n");
}

TEST_CASE("metrics_table_csv fallbacks and validation") {
  // No "model" key: the fallback name fills in; commas get quoted.
  const std::string csv = metrics_table_csv(
      {{"run,1", R"({"r2":0.5,"mse":0.25,"rmse":0.5,"mae":0.4})"}});
  CHECK(csv ==
        "model,r2,mse,rmse,mae\n"
        "\"run,1\",0.5,0.25,0.5,0.4\n");

  CHECK(fails_with(ErrorCode::InvalidArgument, [] { metrics_table_csv({}); }));
  CHECK(fails_with(ErrorCode::SchemaMismatch, [] {
    metrics_table_csv({{"bad", "not json"}});
  }));
  CHECK(fails_with(ErrorCode::SchemaMismatch, [] {
    metrics_table_csv({{"arr", "[1,2]"}});
  }));
  CHECK(fails_with(ErrorCode::SchemaMismatch, [] {
    metrics_table_csv({{"gap", R"({"r2":0.5,"mse":0.25,"rmse":0.5})"}});
  }));
  CHECK(fails_with(ErrorCode::SchemaMismatch, [] {
    metrics_table_csv(
        {{"text", R"({"r2":"high","mse":0.25,"rmse":0.5,"mae":0.4})"}});
  }));
}
