#include "core/feature_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace qoe {

const std::vector<std::string>& all_feature_names() {
  static const std::vector<std::string> kNames = {
      "delay",        "bitrate",       "jitter",         "throughput",
      "packet_loss",  "log_delay",     "log_bitrate",    "thr_x_jitter",
      "delay_x_jitter", "packet_loss_sq", "loss_rate"};
  return kNames;
}

const std::vector<std::string>& base_feature_names() {
  static const std::vector<std::string> kNames = {
      "delay", "bitrate", "jitter", "throughput", "packet_loss"};
  return kNames;
}

namespace {

std::vector<double> build_row(double delay, double bitrate, double jitter,
                              double throughput, double loss_pct) {
  if (delay <= 0 || bitrate <= 0) {
    fail(ErrorCode::NotCleaned,
         "delay " + std::to_string(delay) + " / bitrate " +
             std::to_string(bitrate) +
             " would be dropped by cleaning (delay of -1000 or 0 and "
             "bitrate of 0 are removed); clean the data first");
  }
  return {delay,
          bitrate,
          jitter,
          throughput,
          loss_pct,
          std::log(delay),
          std::log(bitrate),
          throughput * jitter,
          delay * jitter,
          loss_pct * loss_pct,
          bitrate / (loss_pct + 1.0)};
}

}  // namespace

FeatureMatrix engineer(const CleanDataset& dataset) {
  FeatureMatrix m;
  m.feature_names = all_feature_names();
  m.rows.reserve(dataset.records.size());
  m.target.reserve(dataset.records.size());
  for (const auto& r : dataset.records) {
    m.rows.push_back(build_row(
        static_cast<double>(r.delay_ms), static_cast<double>(r.bitrate_kbps),
        static_cast<double>(r.jitter_ms),
        static_cast<double>(r.throughput_bps),
        static_cast<double>(r.loss_x100) / 100.0));
    m.target.push_back(decode_mos(r.mos_x100));
  }
  return m;
}

std::vector<double> engineer_single(double delay_ms, double bitrate_kbps,
                                    double jitter_ms, double throughput_bps,
                                    double loss_pct) {
  if (delay_ms == -1000 || delay_ms == 0 || bitrate_kbps == 0) {
    fail(ErrorCode::NotCleaned,
         "KPIs match the cleaning drop rule (delay of -1000 or 0, or "
         "bitrate of 0): no prediction is defined for them");
  }
  if (jitter_ms == 0 || jitter_ms == -1000) jitter_ms = 1;
  return build_row(delay_ms, bitrate_kbps, jitter_ms, throughput_bps,
                   loss_pct);
}

FeatureMatrix select_features(const FeatureMatrix& matrix,
                              const std::vector<std::string>& names) {
  std::vector<size_t> idx;
  idx.reserve(names.size());
  for (const auto& name : names) {
    auto it = std::find(matrix.feature_names.begin(),
                        matrix.feature_names.end(), name);
    if (it == matrix.feature_names.end()) {
      fail(ErrorCode::FeatureMismatch, "feature \"" + name + "\" not present");
    }
    idx.push_back(static_cast<size_t>(it - matrix.feature_names.begin()));
  }
  FeatureMatrix out;
  out.feature_names = names;
  out.target = matrix.target;
  out.rows.reserve(matrix.rows.size());
  for (const auto& row : matrix.rows) {
    std::vector<double> selected;
    selected.reserve(idx.size());
    for (size_t i : idx) selected.push_back(row[i]);
    out.rows.push_back(std::move(selected));
  }
  return out;
}

std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& matrix,
                                              double test_fraction,
                                              uint64_t seed) {
  const size_t n = matrix.n_rows();
  if (n < 5) {
    fail(ErrorCode::TooFewRows,
         "need at least 5 rows to split, have " + std::to_string(n));
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "test_fraction must be in (0,1)");
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  for (size_t i = n - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(i)));
    std::swap(order[i], order[j]);
  }

  size_t test_count = static_cast<size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  test_count = std::clamp<size_t>(test_count, 1, n - 1);

  FeatureMatrix train, test;
  train.feature_names = test.feature_names = matrix.feature_names;
  for (size_t i = 0; i < n; ++i) {
    FeatureMatrix& side = i < test_count ? test : train;
    side.rows.push_back(matrix.rows[order[i]]);
    side.target.push_back(matrix.target[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

std::pair<FeatureMatrix, FeatureMatrix> standardize(
    const FeatureMatrix& train, const FeatureMatrix& test) {
  if (train.rows.empty()) {
    fail(ErrorCode::EmptyTrain, "standardize: empty training matrix");
  }
  if (train.feature_names != test.feature_names && !test.rows.empty()) {
    fail(ErrorCode::FeatureMismatch,
         "standardize: train/test feature names differ");
  }

  const size_t f = train.n_features();
  const double n = static_cast<double>(train.n_rows());
  std::vector<std::pair<double, double>> norms(f);
  std::vector<bool> constant(f, false);
  for (size_t j = 0; j < f; ++j) {
    double sum = 0;
    for (const auto& row : train.rows) sum += row[j];
    const double mean = sum / n;
    double ss = 0;
    for (const auto& row : train.rows) {
      const double d = row[j] - mean;
      ss += d * d;
    }
    const double std_dev = std::sqrt(ss / n);
    norms[j] = {mean, std_dev};
    constant[j] = std_dev == 0.0;
  }

  auto apply = [&](const FeatureMatrix& src) {
    FeatureMatrix out = src;
    out.normalization = norms;
    out.constant_features = constant;
    for (auto& row : out.rows) {
      for (size_t j = 0; j < f; ++j) {
        if (!constant[j]) row[j] = (row[j] - norms[j].first) / norms[j].second;
      }
    }
    return out;
  };
  return {apply(train), apply(test)};
}

}  // namespace qoe
