#ifndef QOE_CORE_LEARNER_HPP
#define QOE_CORE_LEARNER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/feature_lab.hpp"

namespace qoe {

inline constexpr double kMosMin = 1.0;
inline constexpr double kMosMax = 5.0;

struct LinearModel {
  std::vector<double> coefficients;
  double intercept = 0;
  std::vector<std::string> feature_names;
};

// Flat tree storage; nodes[0] is the root, feature < 0 marks a leaf.
struct TreeNode {
  int32_t feature = -1;
  double threshold = 0;
  int32_t left = -1;
  int32_t right = -1;
  double value = 0;  // leaf mean
  int64_t n = 0;     // leaf sample count
  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
};

struct ForestParams {
  int n_estimators = 600;
  int max_depth = 48;
  double max_features_fraction = 0.58;
  int min_samples_leaf = 1;
  uint64_t seed = 0;
  // The micro examples train on the rows as-is; real runs bag.
  bool bootstrap = true;
  int n_threads = 0;  // 0 = pick from hardware
};

struct ForestModel {
  std::vector<Tree> trees;
  ForestParams params;
  std::vector<std::string> feature_names;
};

struct EvalMetrics {
  double mse = 0;
  double rmse = 0;
  double r2 = 0;
  double mae = 0;
  bool degenerate_target = false;  // zero-variance target, r2 is undefined
};

// OLS via normal equations + Cholesky, with power-of-two column
// equilibration. A rank-deficient design falls back to a small ridge
// term unless ridge_fallback is off, in which case SingularDesign.
LinearModel fit_linear(const FeatureMatrix& train, bool ridge_fallback = true);

// Bagged CART regression trees, variance-reduction splits at midpoints
// of consecutive sorted unique values, ceil(fraction*F) candidate
// features per split. Per-tree RNG streams derive from (seed, tree
// index), so parallel and serial runs are bit-identical.
ForestModel fit_forest(const FeatureMatrix& train, const ForestParams& params);

// Predictions are clamped into [kMosMin, kMosMax]; *clamped counts how
// many outputs the clamp changed.
std::vector<double> predict(const LinearModel& model,
                            const FeatureMatrix& rows,
                            int64_t* clamped = nullptr);
std::vector<double> predict(const ForestModel& model,
                            const FeatureMatrix& rows,
                            int64_t* clamped = nullptr);
double predict_row(const LinearModel& model, const std::vector<double>& row);
double predict_row(const ForestModel& model, const std::vector<double>& row);

EvalMetrics evaluate(const std::vector<double>& predictions,
                     const std::vector<double>& targets);

int tree_depth(const Tree& tree);  // edges on the longest path

// Versioned binary container for either model kind.
struct Model {
  enum class Kind : uint8_t { kLinear = 0, kForest = 1 };
  Kind kind = Kind::kLinear;
  LinearModel linear;
  ForestModel forest;

  const std::vector<std::string>& feature_names() const {
    return kind == Kind::kLinear ? linear.feature_names
                                 : forest.feature_names;
  }
};

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
double predict_row(const Model& model, const std::vector<double>& row);

}  // namespace qoe

#endif  // QOE_CORE_LEARNER_HPP
