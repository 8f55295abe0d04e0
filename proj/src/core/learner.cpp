#include "core/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <thread>

#include "core/errors.hpp"
#include "core/har_ingest.hpp"
#include "core/rng.hpp"

namespace qoe {

namespace {

double clamp_mos(double v, int64_t* clamped) {
  const double c = std::clamp(v, kMosMin, kMosMax);
  if (c != v && clamped) ++*clamped;
  return c;
}

// Cholesky in place; returns false on a non-positive pivot.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, size_t n,
                    std::vector<double>* x) {
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = a[i * n + j];
      for (size_t k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (!(sum > 0)) return false;
        a[i * n + j] = std::sqrt(sum);
      } else {
        a[i * n + j] = sum / a[j * n + j];
      }
    }
  }
  // L y = b
  for (size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (size_t k = 0; k < i; ++k) sum -= a[i * n + k] * b[k];
    b[i] = sum / a[i * n + i];
  }
  // L^T x = y
  x->assign(n, 0.0);
  for (size_t ii = n; ii-- > 0;) {
    double sum = b[ii];
    for (size_t k = ii + 1; k < n; ++k) sum -= a[k * n + ii] * (*x)[k];
    (*x)[ii] = sum / a[ii * n + ii];
  }
  return true;
}

}  // namespace

LinearModel fit_linear(const FeatureMatrix& train, bool ridge_fallback) {
  const size_t n = train.n_rows();
  const size_t f = train.n_features();
  if (n == 0) fail(ErrorCode::EmptyTrain, "fit_linear: no rows");
  if (n <= f) {
    fail(ErrorCode::TooFewRows, "fit_linear: " + std::to_string(n) +
                                    " rows for " + std::to_string(f) +
                                    " features");
  }

  // Power-of-two column scales keep X^T X conditioned without changing
  // representable results.
  const size_t cols = f + 1;  // intercept last
  std::vector<double> scale(cols, 1.0);
  for (size_t j = 0; j < f; ++j) {
    double max_abs = 0;
    for (const auto& row : train.rows) {
      max_abs = std::max(max_abs, std::abs(row[j]));
    }
    if (max_abs > 0) {
      scale[j] = std::exp2(-std::round(std::log2(max_abs)));
    }
  }

  std::vector<double> xtx(cols * cols, 0.0);
  std::vector<double> xty(cols, 0.0);
  std::vector<double> xrow(cols, 1.0);
  for (size_t r = 0; r < n; ++r) {
    for (size_t j = 0; j < f; ++j) xrow[j] = train.rows[r][j] * scale[j];
    xrow[f] = 1.0;
    const double y = train.target[r];
    for (size_t i = 0; i < cols; ++i) {
      for (size_t j = 0; j <= i; ++j) xtx[i * cols + j] += xrow[i] * xrow[j];
      xty[i] += xrow[i] * y;
    }
  }
  for (size_t i = 0; i < cols; ++i) {
    for (size_t j = i + 1; j < cols; ++j) xtx[i * cols + j] = xtx[j * cols + i];
  }

  std::vector<double> solution;
  if (!cholesky_solve(xtx, xty, cols, &solution)) {
    if (!ridge_fallback) {
      fail(ErrorCode::SingularDesign,
           "design matrix is rank-deficient and the ridge fallback is off");
    }
    double trace = 0;
    for (size_t i = 0; i < cols; ++i) trace += xtx[i * cols + i];
    const double base = trace > 0 ? trace / static_cast<double>(cols) : 1.0;
    bool solved = false;
    for (double lambda = 1e-10; lambda <= 1e-2; lambda *= 100.0) {
      std::vector<double> ridged = xtx;
      for (size_t i = 0; i < cols; ++i) ridged[i * cols + i] += lambda * base;
      if (cholesky_solve(std::move(ridged), xty, cols, &solution)) {
        solved = true;
        break;
      }
    }
    if (!solved) {
      fail(ErrorCode::SingularDesign,
           "design matrix is rank-deficient beyond ridge repair");
    }
  }

  LinearModel model;
  model.feature_names = train.feature_names;
  model.coefficients.resize(f);
  for (size_t j = 0; j < f; ++j) model.coefficients[j] = solution[j] * scale[j];
  model.intercept = solution[f];
  return model;
}

namespace {

struct TreeBuilder {
  const FeatureMatrix& data;
  const ForestParams& params;
  int k_features;
  Rng rng;
  Tree tree;

  // Scratch reused across nodes.
  std::vector<std::pair<double, double>> sorted;  // (feature value, target)

  TreeBuilder(const FeatureMatrix& d, const ForestParams& p, uint64_t seed)
      : data(d), params(p), rng(seed) {
    const int f = static_cast<int>(d.n_features());
    k_features = std::clamp(
        static_cast<int>(std::ceil(params.max_features_fraction * f)), 1, f);
  }

  int build(std::vector<size_t>& indices, size_t begin, size_t end,
            int depth) {
    const size_t count = end - begin;
    double sum = 0;
    double min_t = std::numeric_limits<double>::infinity();
    double max_t = -min_t;
    for (size_t i = begin; i < end; ++i) {
      const double t = data.target[indices[i]];
      sum += t;
      min_t = std::min(min_t, t);
      max_t = std::max(max_t, t);
    }
    const double mean = sum / static_cast<double>(count);

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});

    const bool can_split =
        depth < params.max_depth && min_t < max_t &&
        count >= 2 * static_cast<size_t>(params.min_samples_leaf);

    int best_feature = -1;
    double best_threshold = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    if (can_split) {
      // Candidate features: k draws without replacement, evaluated in
      // ascending index order so equal-gain ties resolve to the lowest
      // feature index, then the lowest threshold.
      const int f = static_cast<int>(data.n_features());
      std::vector<int> pool(f);
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < k_features; ++i) {
        const int j = static_cast<int>(
            rng.uniform_int(i, static_cast<int64_t>(f) - 1));
        std::swap(pool[i], pool[j]);
      }
      std::sort(pool.begin(), pool.begin() + k_features);

      for (int ci = 0; ci < k_features; ++ci) {
        const int feature = pool[ci];
        sorted.clear();
        sorted.reserve(count);
        for (size_t i = begin; i < end; ++i) {
          sorted.emplace_back(data.rows[indices[i]][feature],
                              data.target[indices[i]]);
        }
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (sorted.front().first == sorted.back().first) continue;

        const double total_sum =
            std::accumulate(sorted.begin(), sorted.end(), 0.0,
                            [](double acc, const auto& p) { return acc + p.second; });
        double total_sq = 0;
        for (const auto& p : sorted) total_sq += p.second * p.second;

        double left_sum = 0, left_sq = 0;
        for (size_t i = 0; i + 1 < count; ++i) {
          left_sum += sorted[i].second;
          left_sq += sorted[i].second * sorted[i].second;
          if (sorted[i].first == sorted[i + 1].first) continue;
          const size_t n_l = i + 1;
          const size_t n_r = count - n_l;
          if (n_l < static_cast<size_t>(params.min_samples_leaf) ||
              n_r < static_cast<size_t>(params.min_samples_leaf)) {
            continue;
          }
          const double right_sum = total_sum - left_sum;
          const double right_sq = total_sq - left_sq;
          const double sse =
              (left_sq - left_sum * left_sum / static_cast<double>(n_l)) +
              (right_sq - right_sum * right_sum / static_cast<double>(n_r));
          if (sse < best_sse) {
            best_sse = sse;
            best_feature = feature;
            best_threshold = (sorted[i].first + sorted[i + 1].first) / 2.0;
          }
        }
      }
    }

    if (best_feature < 0) {
      TreeNode& leaf = tree.nodes[node_index];
      // A pure leaf takes the value directly; the accumulated mean can be
      // off by an ulp and constants must round-trip exactly.
      leaf.value = (min_t == max_t) ? min_t : mean;
      leaf.n = static_cast<int64_t>(count);
      return node_index;
    }

    // Partition indices in place around the threshold.
    auto mid_it = std::partition(
        indices.begin() + static_cast<ptrdiff_t>(begin),
        indices.begin() + static_cast<ptrdiff_t>(end), [&](size_t idx) {
          return data.rows[idx][best_feature] <= best_threshold;
        });
    const size_t mid =
        static_cast<size_t>(mid_it - indices.begin());

    tree.nodes[node_index].feature = best_feature;
    tree.nodes[node_index].threshold = best_threshold;
    tree.nodes[node_index].n = static_cast<int64_t>(count);
    const int left = build(indices, begin, mid, depth + 1);
    tree.nodes[node_index].left = left;
    const int right = build(indices, mid, end, depth + 1);
    tree.nodes[node_index].right = right;
    return node_index;
  }
};

Tree fit_tree(const FeatureMatrix& train, const ForestParams& params,
              uint64_t tree_seed) {
  TreeBuilder builder(train, params, tree_seed);
  const size_t n = train.n_rows();
  std::vector<size_t> indices(n);
  if (params.bootstrap) {
    for (size_t i = 0; i < n; ++i) {
      indices[i] = static_cast<size_t>(
          builder.rng.uniform_int(0, static_cast<int64_t>(n) - 1));
    }
  } else {
    std::iota(indices.begin(), indices.end(), size_t{0});
  }
  builder.tree.nodes.reserve(2 * n);
  builder.build(indices, 0, n, 0);
  return std::move(builder.tree);
}

double tree_predict(const Tree& tree, const std::vector<double>& row) {
  int i = 0;
  while (!tree.nodes[i].is_leaf()) {
    const TreeNode& node = tree.nodes[i];
    i = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return tree.nodes[i].value;
}

}  // namespace

ForestModel fit_forest(const FeatureMatrix& train, const ForestParams& params) {
  if (train.n_rows() < 2) {
    fail(ErrorCode::EmptyTrain, "fit_forest: need at least 2 rows, have " +
                                    std::to_string(train.n_rows()));
  }
  if (params.n_estimators < 1 || params.max_depth < 1 ||
      params.min_samples_leaf < 1 ||
      !(params.max_features_fraction > 0.0 &&
        params.max_features_fraction <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "fit_forest: bad hyperparameters");
  }

  ForestModel model;
  model.params = params;
  model.feature_names = train.feature_names;
  model.trees.resize(static_cast<size_t>(params.n_estimators));

  unsigned threads = params.n_threads > 0
                         ? static_cast<unsigned>(params.n_threads)
                         : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u,
                       static_cast<unsigned>(params.n_estimators));

  auto train_range = [&](size_t first, size_t step) {
    for (size_t t = first; t < model.trees.size(); t += step) {
      model.trees[t] =
          fit_tree(train, params, Rng::derive(params.seed, t));
    }
  };

  if (threads <= 1) {
    train_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back(train_range, w, threads);
    }
    for (auto& th : pool) th.join();
  }
  return model;
}

double predict_row(const LinearModel& model, const std::vector<double>& row) {
  if (row.size() != model.coefficients.size()) {
    fail(ErrorCode::FeatureMismatch,
         "linear model expects " + std::to_string(model.coefficients.size()) +
             " features, got " + std::to_string(row.size()));
  }
  double v = model.intercept;
  for (size_t j = 0; j < row.size(); ++j) v += model.coefficients[j] * row[j];
  return std::clamp(v, kMosMin, kMosMax);
}

double predict_row(const ForestModel& model, const std::vector<double>& row) {
  if (row.size() != model.feature_names.size()) {
    fail(ErrorCode::FeatureMismatch,
         "forest expects " + std::to_string(model.feature_names.size()) +
             " features, got " + std::to_string(row.size()));
  }
  // When every tree agrees (constant targets), return the shared value
  // so constants round-trip exactly instead of through a mean.
  const double first = tree_predict(model.trees.front(), row);
  double sum = first;
  bool all_equal = true;
  for (size_t t = 1; t < model.trees.size(); ++t) {
    const double p = tree_predict(model.trees[t], row);
    all_equal = all_equal && p == first;
    sum += p;
  }
  const double v =
      all_equal ? first : sum / static_cast<double>(model.trees.size());
  return std::clamp(v, kMosMin, kMosMax);
}

namespace {

template <typename M>
std::vector<double> predict_matrix(const M& model, const FeatureMatrix& rows,
                                   int64_t* clamped) {
  if (!rows.feature_names.empty() &&
      rows.feature_names != model.feature_names) {
    fail(ErrorCode::FeatureMismatch,
         "prediction features do not match the model's training features");
  }
  const size_t width = model.feature_names.size();
  std::vector<double> out;
  out.reserve(rows.n_rows());
  if (clamped) *clamped = 0;
  for (const auto& row : rows.rows) {
    if (row.size() != width) {
      fail(ErrorCode::FeatureMismatch,
           "row has " + std::to_string(row.size()) + " features, model needs " +
               std::to_string(width));
    }
    // predict_row clamps; recompute the raw value to count clamps.
    double raw;
    if constexpr (std::is_same_v<M, LinearModel>) {
      raw = model.intercept;
      for (size_t j = 0; j < row.size(); ++j) {
        raw += model.coefficients[j] * row[j];
      }
    } else {
      const double first = tree_predict(model.trees.front(), row);
      double sum = first;
      bool all_equal = true;
      for (size_t t = 1; t < model.trees.size(); ++t) {
        const double p = tree_predict(model.trees[t], row);
        all_equal = all_equal && p == first;
        sum += p;
      }
      raw = all_equal ? first : sum / static_cast<double>(model.trees.size());
    }
    out.push_back(clamp_mos(raw, clamped));
  }
  return out;
}

}  // namespace

std::vector<double> predict(const LinearModel& model, const FeatureMatrix& rows,
                            int64_t* clamped) {
  return predict_matrix(model, rows, clamped);
}

std::vector<double> predict(const ForestModel& model, const FeatureMatrix& rows,
                            int64_t* clamped) {
  if (model.trees.empty()) {
    fail(ErrorCode::InvalidArgument, "forest has no trees");
  }
  return predict_matrix(model, rows, clamped);
}

EvalMetrics evaluate(const std::vector<double>& predictions,
                     const std::vector<double>& targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    fail(ErrorCode::LengthMismatch,
         "evaluate: need equal non-zero lengths, got " +
             std::to_string(predictions.size()) + " and " +
             std::to_string(targets.size()));
  }
  const double n = static_cast<double>(targets.size());
  double se = 0, ae = 0, t_sum = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    const double d = predictions[i] - targets[i];
    se += d * d;
    ae += std::abs(d);
    t_sum += targets[i];
  }
  const double t_mean = t_sum / n;
  double ss_tot = 0;
  for (const double t : targets) {
    const double d = t - t_mean;
    ss_tot += d * d;
  }

  EvalMetrics m;
  m.mse = se / n;
  m.rmse = std::sqrt(m.mse);
  m.mae = ae / n;
  if (ss_tot == 0.0) {
    m.degenerate_target = true;
    m.r2 = std::numeric_limits<double>::quiet_NaN();
  } else {
    m.r2 = 1.0 - se / ss_tot;
  }
  return m;
}

int tree_depth(const Tree& tree) {
  // Iterative depth via parallel depth array; nodes are stored preorder so
  // parents precede children.
  if (tree.nodes.empty()) return 0;
  std::vector<int> depth(tree.nodes.size(), 0);
  int max_depth = 0;
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) continue;
    depth[node.left] = depth[i] + 1;
    depth[node.right] = depth[i] + 1;
    max_depth = std::max({max_depth, depth[node.left], depth[node.right]});
  }
  return max_depth;
}

namespace {

constexpr char kMagic[4] = {'Q', 'O', 'E', 'M'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::string* buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf->append(bytes, sizeof(T));
}

void put_string(std::string* buf, const std::string& s) {
  put<uint32_t>(buf, static_cast<uint32_t>(s.size()));
  buf->append(s);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  const std::string& path;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > buf.size()) {
      fail(ErrorCode::SchemaMismatch, path + ": model file truncated");
    }
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
  }

  std::string get_string() {
    const uint32_t len = get<uint32_t>();
    if (pos + len > buf.size()) {
      fail(ErrorCode::SchemaMismatch, path + ": model file truncated");
    }
    std::string s = buf.substr(pos, len);
    pos += len;
    return s;
  }
};

}  // namespace

void save_model(const Model& model, const std::string& path) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put<uint32_t>(&buf, kVersion);
  put<uint8_t>(&buf, static_cast<uint8_t>(model.kind));

  const auto& names = model.feature_names();
  put<uint32_t>(&buf, static_cast<uint32_t>(names.size()));
  for (const auto& name : names) put_string(&buf, name);

  if (model.kind == Model::Kind::kLinear) {
    put<double>(&buf, model.linear.intercept);
    for (const double c : model.linear.coefficients) put<double>(&buf, c);
  } else {
    const ForestModel& f = model.forest;
    put<int32_t>(&buf, f.params.n_estimators);
    put<int32_t>(&buf, f.params.max_depth);
    put<double>(&buf, f.params.max_features_fraction);
    put<int32_t>(&buf, f.params.min_samples_leaf);
    put<uint64_t>(&buf, f.params.seed);
    put<uint8_t>(&buf, f.params.bootstrap ? 1 : 0);
    put<uint32_t>(&buf, static_cast<uint32_t>(f.trees.size()));
    for (const Tree& tree : f.trees) {
      put<uint32_t>(&buf, static_cast<uint32_t>(tree.nodes.size()));
      for (const TreeNode& n : tree.nodes) {
        put<int32_t>(&buf, n.feature);
        put<double>(&buf, n.threshold);
        put<int32_t>(&buf, n.left);
        put<int32_t>(&buf, n.right);
        put<double>(&buf, n.value);
        put<int64_t>(&buf, n.n);
      }
    }
  }
  write_text_file(path, buf);
}

Model load_model(const std::string& path) {
  const std::string buf = read_text_file(path);
  Reader r{buf, 0, path};
  if (buf.size() < sizeof(kMagic) ||
      std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::SchemaMismatch, path + ": not a model file (bad magic)");
  }
  r.pos = sizeof(kMagic);
  const uint32_t version = r.get<uint32_t>();
  if (version != kVersion) {
    fail(ErrorCode::SchemaMismatch,
         path + ": unsupported model version " + std::to_string(version));
  }
  const uint8_t kind = r.get<uint8_t>();
  if (kind > 1) {
    fail(ErrorCode::SchemaMismatch, path + ": unknown model kind");
  }

  Model model;
  model.kind = static_cast<Model::Kind>(kind);
  const uint32_t n_features = r.get<uint32_t>();
  std::vector<std::string> names(n_features);
  for (auto& name : names) name = r.get_string();

  if (model.kind == Model::Kind::kLinear) {
    model.linear.feature_names = std::move(names);
    model.linear.intercept = r.get<double>();
    model.linear.coefficients.resize(n_features);
    for (auto& c : model.linear.coefficients) c = r.get<double>();
  } else {
    ForestModel& f = model.forest;
    f.feature_names = std::move(names);
    f.params.n_estimators = r.get<int32_t>();
    f.params.max_depth = r.get<int32_t>();
    f.params.max_features_fraction = r.get<double>();
    f.params.min_samples_leaf = r.get<int32_t>();
    f.params.seed = r.get<uint64_t>();
    f.params.bootstrap = r.get<uint8_t>() != 0;
    const uint32_t n_trees = r.get<uint32_t>();
    f.trees.resize(n_trees);
    for (auto& tree : f.trees) {
      const uint32_t n_nodes = r.get<uint32_t>();
      tree.nodes.resize(n_nodes);
      for (auto& node : tree.nodes) {
        node.feature = r.get<int32_t>();
        node.threshold = r.get<double>();
        node.left = r.get<int32_t>();
        node.right = r.get<int32_t>();
        node.value = r.get<double>();
        node.n = r.get<int64_t>();
      }
    }
  }
  if (r.pos != buf.size()) {
    fail(ErrorCode::SchemaMismatch, path + ": trailing bytes in model file");
  }
  return model;
}

double predict_row(const Model& model, const std::vector<double>& row) {
  return model.kind == Model::Kind::kLinear ? predict_row(model.linear, row)
                                            : predict_row(model.forest, row);
}

}  // namespace qoe
