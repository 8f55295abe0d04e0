#ifndef QOE_CORE_FEATURE_LAB_HPP
#define QOE_CORE_FEATURE_LAB_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/dataset_store.hpp"

namespace qoe {

// Engineered feature order. The first five are the raw KPIs (the
// baseline model's inputs); the rest are derived.
inline constexpr int kBaseFeatureCount = 5;
const std::vector<std::string>& all_feature_names();   // 11 names
const std::vector<std::string>& base_feature_names();  // first 5

struct FeatureMatrix {
  std::vector<std::vector<double>> rows;  // row-major, |row| = |feature_names|
  std::vector<double> target;             // decoded MOS
  std::vector<std::string> feature_names;
  // Per-feature (mean, std) set by standardize(); empty otherwise.
  std::vector<std::pair<double, double>> normalization;
  std::vector<bool> constant_features;  // flagged when std == 0

  size_t n_rows() const { return rows.size(); }
  size_t n_features() const { return feature_names.size(); }
};

// Builds the 11-feature matrix from a cleaned dataset. Raises
// NotCleaned if any delay <= 0 or bitrate <= 0 slips through.
FeatureMatrix engineer(const CleanDataset& dataset);

// Same construction for a single KPI tuple (used by predict).
// loss_pct is in percent (10.0 == 10%). Jitter 0 or -1000 is adjusted
// to 1 as in cleaning; delay/bitrate values the cleaner would drop
// raise NotCleaned.
std::vector<double> engineer_single(double delay_ms, double bitrate_kbps,
                                    double jitter_ms, double throughput_bps,
                                    double loss_pct);

// Projects a matrix onto a subset of its features (by name).
FeatureMatrix select_features(const FeatureMatrix& matrix,
                              const std::vector<std::string>& names);

// Seeded shuffle + partition; |test| = round(test_fraction * N),
// clamped to keep both sides non-empty. N < 5 raises TooFewRows.
std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& matrix,
                                              double test_fraction,
                                              uint64_t seed);

// Z-scores both matrices with train statistics; zero-std features are
// left unchanged and flagged in constant_features.
std::pair<FeatureMatrix, FeatureMatrix> standardize(const FeatureMatrix& train,
                                                    const FeatureMatrix& test);

}  // namespace qoe
#endif  // QOE_CORE_FEATURE_LAB_HPP
