// Command-line front end. Everything goes through the public C API in
// qoe/qoe.h; this file only handles argument plumbing and printing.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qoe/qoe.h"

namespace {

namespace fs = std::filesystem;

// 0 success, 1 runtime failure, 2 usage/config error.
int exit_code_for(int status) {
  switch (status) {
    case QOE_OK:
      return 0;
    case QOE_E_INVALID_ARGUMENT:
    case QOE_E_IO:
    case QOE_E_PARSE:
      return 2;
    default:
      return 1;
  }
}

void print_error(const std::string& context) {
  std::cerr << "qoecli: " << context << ": " << qoe_last_error_message()
            << "\n";
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

struct IngestArgs {
  std::vector<std::string> har_files;
  std::string segment_regex;
  int64_t segment_duration_ms = 0;  // 0 = library default
};

int run_ingest(const IngestArgs& args, const std::string& output_dir) {
  fs::create_directories(output_dir);
  size_t ok = 0;
  for (const auto& har : args.har_files) {
    qoe_capture* capture = nullptr;
    const int status = qoe_capture_from_har(
        har.c_str(), args.segment_regex.empty() ? nullptr
                                                : args.segment_regex.c_str(),
        args.segment_duration_ms, &capture);
    if (status != QOE_OK) {
      print_error("warning: skipping " + har);
      continue;
    }

    const std::string out_path =
        (fs::path(output_dir) / (stem_of(har) + ".capture.json")).string();
    int64_t segments = 0, startup = 0, events = 0;
    double total_s = 0;
    char stalling[256] = {0};
    qoe_capture_segment_count(capture, &segments);
    qoe_capture_startup_ms(capture, &startup);
    qoe_capture_stalls(capture, &total_s, &events, stalling, sizeof(stalling));
    const int save_status = qoe_capture_save(capture, out_path.c_str());
    qoe_capture_free(capture);
    if (save_status != QOE_OK) {
      print_error("warning: could not write capture for " + har);
      continue;
    }

    std::printf(
        "%s: %" PRId64 " segments, startup %" PRId64
        " ms, %" PRId64 " stall(s) totaling %.3f s [%s] -> %s\n",
        har.c_str(), segments, startup, events, total_s, stalling,
        out_path.c_str());
    ++ok;
  }
  if (ok == 0) {
    std::cerr << "qoecli: all " << args.har_files.size()
              << " input file(s) failed\n";
    return 1;
  }
  return 0;
}

struct SynthesizeArgs {
  std::string profiles_path;
  int64_t sessions = 10;
  uint64_t seed = 0;
  std::string out_csv;
  std::string scorer_cmd;
};

int run_synthesize(const SynthesizeArgs& args, const std::string& output_dir) {
  std::string out = args.out_csv;
  if (out.empty()) {
    fs::create_directories(output_dir);
    out = (fs::path(output_dir) / "dataset.csv").string();
  }
  const int status = qoe_synthesize_dataset(
      args.profiles_path.c_str(), args.sessions, args.seed,
      args.scorer_cmd.empty() ? nullptr : args.scorer_cmd.c_str(),
      out.c_str());
  if (status != QOE_OK) {
    print_error("synthesize");
    return exit_code_for(status);
  }
  std::printf("wrote %s (%" PRId64 " sessions per profile, seed %" PRIu64
              ")\n",
              out.c_str(), args.sessions, args.seed);
  return 0;
}

struct TrainArgs {
  std::string dataset_path;
  std::string out_dir;
  qoe_train_params params;
};

int run_train(const TrainArgs& args, const std::string& output_dir) {
  std::string dir = args.out_dir;
  if (dir.empty()) dir = (fs::path(output_dir) / "train").string();
  const int status =
      qoe_train_from_csv(args.dataset_path.c_str(), &args.params, dir.c_str());
  if (status != QOE_OK) {
    print_error("train");
    return exit_code_for(status);
  }
  const std::string report = (fs::path(dir) / "report.txt").string();
  std::ifstream in(report);
  if (in) std::cout << in.rdbuf();
  std::printf("artifacts in %s\n", dir.c_str());
  return 0;
}

struct PredictArgs {
  std::string model_path;
  double delay = 0, bitrate = 0, jitter = 0, throughput = 0, loss = 0;
};

int run_predict(const PredictArgs& args) {
  if (args.loss < 0 || args.loss > 100) {
    std::cerr << "qoecli: warning: loss " << args.loss
              << "% is outside [0,100]\n";
  }
  if (args.jitter < 0 || args.throughput < 0) {
    std::cerr << "qoecli: warning: negative jitter/throughput is outside the "
                 "measured range\n";
  }
  qoe_model* model = nullptr;
  int status = qoe_model_load(args.model_path.c_str(), &model);
  if (status != QOE_OK) {
    print_error("predict: load model");
    return exit_code_for(status);
  }
  double mos = 0;
  status = qoe_model_predict(model, args.delay, args.bitrate, args.jitter,
                             args.throughput, args.loss, &mos);
  qoe_model_free(model);
  if (status != QOE_OK) {
    print_error("predict");
    return exit_code_for(status);
  }
  std::printf("%.6g\n", mos);
  return 0;
}

struct PlotDataArgs {
  std::vector<std::string> metrics_files;
  std::string out_csv;
};

int run_plot_data(const PlotDataArgs& args, const std::string& output_dir) {
  std::string out = args.out_csv;
  if (out.empty()) {
    fs::create_directories(output_dir);
    out = (fs::path(output_dir) / "plot_data.csv").string();
  }
  std::vector<const char*> paths;
  paths.reserve(args.metrics_files.size());
  for (const auto& p : args.metrics_files) paths.push_back(p.c_str());
  const int status = qoe_metrics_table(paths.data(), paths.size(), out.c_str());
  if (status != QOE_OK) {
    print_error("plot-data");
    return exit_code_for(status);
  }
  std::ifstream in(out);
  if (in) std::cout << in.rdbuf();
  std::cerr << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      std::string("qoecli ") + qoe_version() +
      " - streaming QoE measurement, dataset synthesis and MOS models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "options file (key=value, [section] per subcommand)");

  std::string output_dir = "qoe-out";
  app.add_option("--output-dir", output_dir,
                 "directory for default output paths")
      ->envname("QOE_OUTPUT_DIR");

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand(
      "ingest", "parse HAR captures into segment-timeline documents");
  ingest->add_option("har_files", ingest_args.har_files, "HAR 1.2 files")
      ->required();
  ingest->add_option("--segment-regex", ingest_args.segment_regex,
                     "URL pattern that marks media segments");
  ingest->add_option("--segment-duration-ms", ingest_args.segment_duration_ms,
                     "uniform playback duration per segment (default 10000)");

  SynthesizeArgs synth_args;
  CLI::App* synthesize = app.add_subcommand(
      "synthesize", "emulate sessions over network profiles into a dataset");
  synthesize
      ->add_option("--profiles", synth_args.profiles_path,
                   "network profile config file")
      ->required();
  synthesize->add_option("--sessions", synth_args.sessions,
                         "sessions per profile (default 10)");
  synthesize->add_option("--seed", synth_args.seed, "master seed");
  synthesize->add_option("--out", synth_args.out_csv,
                         "dataset CSV path (default <output-dir>/dataset.csv)");
  synthesize
      ->add_option("--scorer-cmd", synth_args.scorer_cmd,
                   "external scorer command (empty = built-in)")
      ->envname("QOE_SCORER_CMD");

  TrainArgs train_args;
  qoe_train_params_init(&train_args.params);
  CLI::App* train = app.add_subcommand(
      "train", "fit and evaluate the baseline and forest models");
  train->add_option("--dataset", train_args.dataset_path, "dataset CSV")
      ->required();
  train->add_option("--out-dir", train_args.out_dir,
                    "artifact directory (default <output-dir>/train)");
  train->add_option("--seed", train_args.params.seed, "split + forest seed");
  train->add_option("--test-fraction", train_args.params.test_fraction,
                    "held-out fraction (default 0.2)");
  train->add_option("--trees", train_args.params.n_estimators,
                    "forest size (default 600)");
  train->add_option("--max-depth", train_args.params.max_depth,
                    "tree depth limit (default 48)");
  train->add_option("--max-features", train_args.params.max_features_fraction,
                    "feature fraction per split (default 0.58)");
  train->add_option("--min-samples-leaf", train_args.params.min_samples_leaf,
                    "minimum samples per leaf (default 1)");
  train->add_option("--threads", train_args.params.n_threads,
                    "training threads (0 = automatic)");

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand(
      "predict", "predict MOS from the five network KPIs");
  predict->add_option("--model", predict_args.model_path, "model file")
      ->required();
  predict->add_option("--delay", predict_args.delay, "delay in ms")
      ->required();
  predict->add_option("--bitrate", predict_args.bitrate, "bitrate in kbps")
      ->required();
  predict->add_option("--jitter", predict_args.jitter, "jitter in ms")
      ->required();
  predict
      ->add_option("--throughput", predict_args.throughput,
                   "throughput in bps")
      ->required();
  predict->add_option("--loss", predict_args.loss, "packet loss in percent")
      ->required();

  PlotDataArgs plot_args;
  CLI::App* plot_data = app.add_subcommand(
      "plot-data", "merge metrics JSON files into a chartable CSV");
  plot_data->add_option("metrics_files", plot_args.metrics_files,
                        "metrics JSON files")
      ->required();
  plot_data->add_option("--out", plot_args.out_csv,
                        "table path (default <output-dir>/plot_data.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (ingest->parsed()) return run_ingest(ingest_args, output_dir);
  if (synthesize->parsed()) return run_synthesize(synth_args, output_dir);
  if (train->parsed()) return run_train(train_args, output_dir);
  if (predict->parsed()) return run_predict(predict_args);
  if (plot_data->parsed()) return run_plot_data(plot_args, output_dir);
  return 2;
}
