// Copyright 2026 The Prosody Bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prosody/trees.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "prosody/error.hpp"
#include "prosody/rng.hpp"

namespace prosody {

namespace {

enum class Criterion { Gini, Newton };

// Per-row sufficient statistics. Gini: a, b are the weights of class 0 and
// class 1. Newton: a, b are the weighted gradient and hessian.
struct RowStat {
  double a = 0.0;
  double b = 0.0;
  double cover = 0.0;
  std::uint32_t count = 0;
};

struct Totals {
  double a = 0.0;
  double b = 0.0;
  double cover = 0.0;
  std::uint64_t n = 0;

  void add(const RowStat& s) {
    a += s.a;
    b += s.b;
    cover += s.cover;
    n += s.count;
  }
  Totals minus(const Totals& o) const { return {a - o.a, b - o.b, cover - o.cover, n - o.n}; }
};

struct GrowParams {
  Criterion criterion = Criterion::Gini;
  int max_depth = -1;
  std::size_t min_leaf = 1;
  double lambda = 0.0;
  double min_child_weight = 0.0;
  double leaf_scale = 1.0;
  std::size_t features_per_split = 0;
  bool parallel = false;
};

struct Candidate {
  double gain = 0.0;
  double threshold = 0.0;
  bool valid = false;
};

using SortedColumns = std::vector<std::vector<std::uint32_t>>;

SortedColumns sort_columns(const MatrixView& X, bool parallel) {
  SortedColumns order(X.cols);
  const auto d = static_cast<std::ptrdiff_t>(X.cols);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t f = 0; f < d; ++f) {
    auto& idx = order[static_cast<std::size_t>(f)];
    idx.resize(X.rows);
    std::iota(idx.begin(), idx.end(), 0u);
    const auto col = static_cast<std::size_t>(f);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::uint32_t i, std::uint32_t j) { return X.at(i, col) < X.at(j, col); });
  }
  return order;
}

double node_score(const Totals& t, const GrowParams& p) {
  if (p.criterion == Criterion::Gini) {
    const double w = t.a + t.b;
    return w > 0.0 ? (t.a * t.a + t.b * t.b) / w : 0.0;
  }
  return t.a * t.a / (t.b + p.lambda);
}

double split_gain(const Totals& left, const Totals& right, double parent_score, const GrowParams& p) {
  const double g = node_score(left, p) + node_score(right, p) - parent_score;
  return p.criterion == Criterion::Newton ? 0.5 * g : g;
}

double leaf_value(const Totals& t, const GrowParams& p) {
  if (p.criterion == Criterion::Gini) {
    const double w = t.a + t.b;
    return w > 0.0 ? t.b / w : 0.0;
  }
  return -p.leaf_scale * t.a / (t.b + p.lambda);
}

double midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid < hi ? mid : lo;
}

// Level-wise exact split search: every feature column is walked once per
// level in presorted order and candidate thresholds for all open nodes are
// scored in the same pass. Results per (feature, node) are reduced in
// feature order, so the chosen split does not depend on the thread schedule.
Tree grow(const MatrixView& X, const SortedColumns& order, std::span<const RowStat> stats,
          const GrowParams& p, Rng* rng) {
  const std::size_t n = X.rows;
  const std::size_t d = X.cols;
  const std::size_t k = p.features_per_split == 0 ? d : std::min(p.features_per_split, d);

  struct Open {
    std::size_t node;
    int depth;
    Totals tot;
  };

  Tree tree;
  std::vector<int> slot(n, -1);
  Totals root;
  for (std::size_t r = 0; r < n; ++r) {
    if (stats[r].count == 0) continue;
    slot[r] = 0;
    root.add(stats[r]);
  }
  tree.nodes.emplace_back();
  tree.nodes[0].cover = root.cover;
  std::vector<Open> open{{0, 0, root}};

  std::vector<std::uint8_t> considers;
  std::vector<Candidate> best;
  std::vector<std::size_t> pool(d);

  while (!open.empty()) {
    const std::size_t m = open.size();
    std::vector<std::uint8_t> splittable(m, 0);
    std::vector<double> parent_score(m), tol(m);
    considers.assign(m * d, 0);
    std::vector<std::uint8_t> feature_used(d, 0);

    for (std::size_t s = 0; s < m; ++s) {
      const Open& o = open[s];
      bool ok = o.tot.n >= 2 * p.min_leaf && o.tot.n >= 2;
      if (p.max_depth >= 0 && o.depth >= p.max_depth) ok = false;
      if (p.criterion == Criterion::Gini && !(o.tot.a > 0.0 && o.tot.b > 0.0)) ok = false;
      if (p.criterion == Criterion::Newton && o.tot.b < 2.0 * p.min_child_weight) ok = false;
      if (!ok) continue;
      splittable[s] = 1;
      parent_score[s] = node_score(o.tot, p);
      tol[s] = 1e-12 * std::abs(parent_score[s]);
      if (k == d) {
        std::fill_n(considers.begin() + static_cast<std::ptrdiff_t>(s * d), d, 1);
        std::fill(feature_used.begin(), feature_used.end(), 1);
      } else {
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng->index(d - i));
          std::swap(pool[i], pool[j]);
          considers[s * d + pool[i]] = 1;
          feature_used[pool[i]] = 1;
        }
      }
    }

    best.assign(d * m, Candidate{});
    auto scan = [&](std::size_t f) {
      if (!feature_used[f]) return;
      std::vector<Totals> left(m);
      std::vector<double> last(m, 0.0);
      std::vector<std::uint8_t> seen(m, 0);
      for (std::uint32_t r : order[f]) {
        const int si = slot[r];
        if (si < 0) continue;
        const auto s = static_cast<std::size_t>(si);
        if (!splittable[s] || !considers[s * d + f]) continue;
        const double v = X.at(r, f);
        if (seen[s] && v > last[s]) {
          const Totals& L = left[s];
          const Totals R = open[s].tot.minus(L);
          bool valid = L.n >= p.min_leaf && R.n >= p.min_leaf;
          if (p.criterion == Criterion::Newton) {
            valid = valid && L.b >= p.min_child_weight && R.b >= p.min_child_weight;
          }
          if (valid) {
            const double g = split_gain(L, R, parent_score[s], p);
            Candidate& c = best[f * m + s];
            if (!c.valid || g > c.gain + tol[s]) c = {g, midpoint(last[s], v), true};
          }
        }
        left[s].add(stats[r]);
        last[s] = v;
        seen[s] = 1;
      }
    };
    if (p.parallel) {
      const auto dd = static_cast<std::ptrdiff_t>(d);
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t f = 0; f < dd; ++f) scan(static_cast<std::size_t>(f));
    } else {
      for (std::size_t f = 0; f < d; ++f) scan(f);
    }

    std::vector<int> left_slot(m, -1), right_slot(m, -1), split_feature(m, -1);
    std::vector<double> split_threshold(m, 0.0);
    std::vector<Open> next;
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t node = open[s].node;
      int chosen = -1;
      if (splittable[s]) {
        for (std::size_t f = 0; f < d; ++f) {
          const Candidate& c = best[f * m + s];
          if (!c.valid) continue;
          if (chosen < 0 || c.gain > best[static_cast<std::size_t>(chosen) * m + s].gain + tol[s]) {
            chosen = static_cast<int>(f);
          }
        }
      }
      if (chosen >= 0) {
        const Candidate& c = best[static_cast<std::size_t>(chosen) * m + s];
        // Gini: zero-gain splits are kept so XOR-like structure can be
        // found one level down. Newton: only strictly useful splits.
        const bool accept = p.criterion == Criterion::Gini ? c.gain >= -tol[s] : c.gain > tol[s];
        if (!accept) chosen = -1;
      }
      if (chosen < 0) {
        tree.nodes[node].value = leaf_value(open[s].tot, p);
        continue;
      }
      const Candidate& c = best[static_cast<std::size_t>(chosen) * m + s];
      split_feature[s] = chosen;
      split_threshold[s] = c.threshold;
      left_slot[s] = static_cast<int>(next.size());
      next.push_back({tree.nodes.size(), open[s].depth + 1, {}});
      tree.nodes.emplace_back();
      right_slot[s] = static_cast<int>(next.size());
      next.push_back({tree.nodes.size(), open[s].depth + 1, {}});
      tree.nodes.emplace_back();
      TreeNode& nd = tree.nodes[node];
      nd.feature = chosen;
      nd.threshold = c.threshold;
      nd.left = static_cast<int>(next[static_cast<std::size_t>(left_slot[s])].node);
      nd.right = static_cast<int>(next[static_cast<std::size_t>(right_slot[s])].node);
      nd.gain = std::max(0.0, c.gain);
      nd.value = leaf_value(open[s].tot, p);
    }

    for (std::size_t r = 0; r < n; ++r) {
      const int si = slot[r];
      if (si < 0) continue;
      const auto s = static_cast<std::size_t>(si);
      if (left_slot[s] < 0) {
        slot[r] = -1;
        continue;
      }
      const bool go_left = X.at(r, static_cast<std::size_t>(split_feature[s])) <= split_threshold[s];
      slot[r] = go_left ? left_slot[s] : right_slot[s];
      next[static_cast<std::size_t>(slot[r])].tot.add(stats[r]);
    }
    for (const Open& o : next) tree.nodes[o.node].cover = o.tot.cover;
    open = std::move(next);
  }
  return tree;
}

void check_training_input(const MatrixView& X, std::span<const int> y) {
  if (X.rows == 0) fail(ErrorKind::Empty, "training matrix has no rows");
  if (y.size() != X.rows) {
    fail(ErrorKind::DimensionMismatch, "label count " + std::to_string(y.size()) + " != row count " +
                                           std::to_string(X.rows));
  }
  if (X.rows > std::numeric_limits<std::uint32_t>::max()) fail(ErrorKind::InvalidArgument, "too many rows");
  for (std::size_t i = 0; i < X.data.size(); ++i) {
    if (!std::isfinite(X.data[i])) {
      fail(ErrorKind::NonFiniteFeature, "non-finite value at row " + std::to_string(i / X.cols) + ", column " +
                                            std::to_string(i % X.cols));
    }
  }
  for (int label : y) {
    if (label != 0 && label != 1) fail(ErrorKind::InvalidArgument, "labels must be 0 or 1");
  }
}

void require_two_classes(std::span<const int> y) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
    fail(ErrorKind::SingleClassInput, "training labels contain a single class");
  }
}

std::vector<RowStat> gini_stats(std::span<const int> y, std::span<const double> w,
                                std::span<const std::uint32_t> counts) {
  std::vector<RowStat> stats(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double mass = w[i] * counts[i];
    stats[i] = {y[i] == 0 ? mass : 0.0, y[i] == 1 ? mass : 0.0, mass, counts[i]};
  }
  return stats;
}

}  // namespace

MatrixView::MatrixView(std::span<const double> d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {
  if (d.size() != r * c) fail(ErrorKind::DimensionMismatch, "matrix data size does not match shape");
}

std::size_t Tree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& nd = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
  }
  return i;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

ClassWeights inverse_frequency_weights(std::span<const int> labels) {
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n = static_cast<double>(labels.size());
  const double n_neg = n - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return {};
  return {n / (2.0 * n_pos), n / (2.0 * n_neg)};
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Cart: return "cart";
    case ModelKind::Forest: return "forest";
    case ModelKind::Boosted: return "boosted";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "cart" || text == "tree") return ModelKind::Cart;
  if (text == "forest" || text == "rf") return ModelKind::Forest;
  if (text == "boosted" || text == "xgb" || text == "xgboost") return ModelKind::Boosted;
  fail(ErrorKind::ConfigError, "unknown model kind '" + text + "'");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> TreeModel::predict_raw(const MatrixView& X, std::size_t max_trees) const {
  if (trees.empty() && kind != ModelKind::Boosted) fail(ErrorKind::UnfittedModel, "model has no trees");
  if (X.rows == 0) return {};
  if (X.cols != dim) {
    fail(ErrorKind::DimensionMismatch, "input has " + std::to_string(X.cols) + " columns, model expects " +
                                           std::to_string(dim));
  }
  for (double v : X.data) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteFeature, "non-finite value in prediction input");
  }
  const std::size_t used = std::min(max_trees, trees.size());
  std::vector<double> out(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) {
    const auto x = X.row(r);
    switch (kind) {
      case ModelKind::Boosted: {
        double z = base_score;
        for (std::size_t t = 0; t < used; ++t) z += trees[t].predict(x);
        out[r] = z;
        break;
      }
      case ModelKind::Forest: {
        std::size_t votes = 0;
        for (std::size_t t = 0; t < used; ++t) votes += trees[t].predict(x) >= 0.5 ? 1 : 0;
        out[r] = used ? static_cast<double>(votes) / static_cast<double>(used) : 0.0;
        break;
      }
      case ModelKind::Cart:
        out[r] = trees[0].predict(x);
        break;
    }
  }
  return out;
}

std::vector<double> TreeModel::predict_proba(const MatrixView& X) const {
  auto out = predict_raw(X);
  if (kind == ModelKind::Boosted) {
    constexpr double kEps = 1e-15;
    for (double& z : out) z = std::clamp(sigmoid(z), kEps, 1.0 - kEps);
  }
  return out;
}

std::vector<int> TreeModel::predict(const MatrixView& X, double threshold) const {
  const auto proba = predict_proba(X);
  std::vector<int> labels(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) labels[i] = proba[i] >= threshold ? 1 : 0;
  return labels;
}

Tree fit_cart(const MatrixView& X, std::span<const int> y, std::span<const double> weights, const CartConfig& cfg) {
  check_training_input(X, y);
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(X.rows, 1.0);
  if (w.size() != X.rows) fail(ErrorKind::DimensionMismatch, "weight count does not match row count");
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidArgument, "row weights must be positive");
  }
  if (cfg.min_leaf == 0) fail(ErrorKind::ConfigError, "min_leaf must be at least 1");
  const std::vector<std::uint32_t> counts(X.rows, 1);
  const auto stats = gini_stats(y, w, counts);
  GrowParams p;
  p.criterion = Criterion::Gini;
  p.max_depth = cfg.max_depth;
  p.min_leaf = cfg.min_leaf;
  p.parallel = cfg.parallel;
  return grow(X, sort_columns(X, cfg.parallel), stats, p, nullptr);
}

TreeModel fit_cart_model(const MatrixView& X, std::span<const int> y, std::span<const double> weights,
                         const CartConfig& cfg) {
  TreeModel m;
  m.kind = ModelKind::Cart;
  m.dim = X.cols;
  m.max_depth = cfg.max_depth;
  m.min_leaf = cfg.min_leaf;
  m.features_per_split = X.cols;
  m.trees.push_back(fit_cart(X, y, weights, cfg));
  return m;
}

TreeModel fit_forest(const MatrixView& X, std::span<const int> y, const ForestConfig& cfg) {
  check_training_input(X, y);
  require_two_classes(y);
  if (cfg.n_trees < 1) fail(ErrorKind::ConfigError, "n_trees must be at least 1");
  if (cfg.min_leaf == 0) fail(ErrorKind::ConfigError, "min_leaf must be at least 1");

  TreeModel m;
  m.kind = ModelKind::Forest;
  m.dim = X.cols;
  m.seed = cfg.seed;
  m.max_depth = cfg.max_depth;
  m.min_leaf = cfg.min_leaf;
  m.bootstrap = cfg.bootstrap;
  m.features_per_split = cfg.features_per_split == 0
                             ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(X.cols))))
                             : std::min(cfg.features_per_split, X.cols);
  m.class_weights = cfg.class_weighting ? inverse_frequency_weights(y) : ClassWeights{};

  std::vector<double> w(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) w[i] = m.class_weights.of(y[i]);

  const SortedColumns order = sort_columns(X, cfg.parallel);
  GrowParams p;
  p.criterion = Criterion::Gini;
  p.max_depth = cfg.max_depth;
  p.min_leaf = cfg.min_leaf;
  p.features_per_split = m.features_per_split;
  p.parallel = false;

  m.trees.resize(static_cast<std::size_t>(cfg.n_trees));
  auto build = [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<std::uint32_t> counts(X.rows, 1);
    if (cfg.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0u);
      for (std::size_t i = 0; i < X.rows; ++i) ++counts[rng.index(X.rows)];
    }
    const auto stats = gini_stats(y, w, counts);
    m.trees[t] = grow(X, order, stats, p, &rng);
  };
  const auto nt = static_cast<std::ptrdiff_t>(cfg.n_trees);
  if (cfg.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < nt; ++t) build(static_cast<std::size_t>(t));
  } else {
    for (std::ptrdiff_t t = 0; t < nt; ++t) build(static_cast<std::size_t>(t));
  }
  return m;
}

TreeModel fit_boosted(const MatrixView& X, std::span<const int> y, const BoostConfig& cfg) {
  check_training_input(X, y);
  require_two_classes(y);
  if (cfg.n_rounds < 0) fail(ErrorKind::ConfigError, "n_rounds must be non-negative");
  if (!(cfg.learning_rate > 0.0)) fail(ErrorKind::ConfigError, "learning_rate must be positive");
  if (cfg.l2_lambda < 0.0 || cfg.min_child_weight < 0.0) {
    fail(ErrorKind::ConfigError, "l2_lambda and min_child_weight must be non-negative");
  }

  TreeModel m;
  m.kind = ModelKind::Boosted;
  m.dim = X.cols;
  m.seed = cfg.seed;
  m.max_depth = cfg.max_depth;
  m.learning_rate = cfg.learning_rate;
  m.l2_lambda = cfg.l2_lambda;
  m.min_child_weight = cfg.min_child_weight;
  m.features_per_split = X.cols;
  m.class_weights = cfg.class_weighting ? inverse_frequency_weights(y) : ClassWeights{};

  std::vector<double> w(X.rows);
  double w_pos = 0.0, w_neg = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    w[i] = m.class_weights.of(y[i]);
    (y[i] == 1 ? w_pos : w_neg) += w[i];
  }
  m.base_score = std::log(w_pos / w_neg);

  const SortedColumns order = sort_columns(X, cfg.parallel);
  GrowParams p;
  p.criterion = Criterion::Newton;
  p.max_depth = cfg.max_depth;
  p.min_leaf = 1;
  p.lambda = cfg.l2_lambda;
  p.min_child_weight = cfg.min_child_weight;
  p.leaf_scale = cfg.learning_rate;
  p.parallel = cfg.parallel;

  std::vector<double> raw(X.rows, m.base_score);
  std::vector<RowStat> stats(X.rows);
  for (int round = 0; round < cfg.n_rounds; ++round) {
    for (std::size_t i = 0; i < X.rows; ++i) {
      const double prob = sigmoid(raw[i]);
      const double g = (prob - y[i]) * w[i];
      const double h = std::max(prob * (1.0 - prob), 1e-16) * w[i];
      stats[i] = {g, h, w[i], 1};
    }
    Tree tree = grow(X, order, stats, p, nullptr);
    for (std::size_t i = 0; i < X.rows; ++i) raw[i] += tree.predict(X.row(i));
    m.trees.push_back(std::move(tree));
  }
  return m;
}

double log_loss(std::span<const double> proba, std::span<const int> y, std::span<const double> weights) {
  if (proba.size() != y.size()) fail(ErrorKind::LengthMismatch, "proba and label lengths differ");
  if (proba.empty()) fail(ErrorKind::Empty, "log loss of empty input");
  double total = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double p = std::clamp(proba[i], 1e-15, 1.0 - 1e-15);
    total -= w * (y[i] == 1 ? std::log(p) : std::log(1.0 - p));
    wsum += w;
  }
  return total / wsum;
}

std::string model_to_json(const TreeModel& model) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["kind"] = to_string(model.kind);
  j["schema_version"] = model.schema_version;
  j["dim"] = model.dim;
  j["seed"] = model.seed;
  j["metadata"] = {
      {"class_weights", {{"ASD", model.class_weights.asd}, {"TD", model.class_weights.td}}},
      {"base_score", model.base_score},
      {"learning_rate", model.learning_rate},
      {"l2_lambda", model.l2_lambda},
      {"min_child_weight", model.min_child_weight},
      {"max_depth", model.max_depth},
      {"min_leaf", model.min_leaf},
      {"features_per_split", model.features_per_split},
      {"bootstrap", model.bootstrap},
      {"n_trees", model.trees.size()},
  };
  auto& trees = j["trees"] = nlohmann::ordered_json::array();
  for (const Tree& t : model.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const TreeNode& nd : t.nodes) {
      if (nd.is_leaf()) {
        nodes.push_back({{"value", nd.value}, {"cover", nd.cover}});
      } else {
        nodes.push_back({{"feature", nd.feature},
                         {"threshold", nd.threshold},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"gain", nd.gain},
                         {"cover", nd.cover},
                         {"value", nd.value}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return j.dump() + "\n";
}

TreeModel model_from_json(const std::string& text) {
  TreeModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != 1) fail(ErrorKind::ParseError, "unsupported model format version");
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.schema_version = j.at("schema_version").get<std::string>();
    m.dim = j.at("dim").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& md = j.at("metadata");
    m.class_weights = {md.at("class_weights").at("ASD").get<double>(), md.at("class_weights").at("TD").get<double>()};
    m.base_score = md.at("base_score").get<double>();
    m.learning_rate = md.at("learning_rate").get<double>();
    m.l2_lambda = md.at("l2_lambda").get<double>();
    m.min_child_weight = md.at("min_child_weight").get<double>();
    m.max_depth = md.at("max_depth").get<int>();
    m.min_leaf = md.at("min_leaf").get<std::size_t>();
    m.features_per_split = md.at("features_per_split").get<std::size_t>();
    m.bootstrap = md.at("bootstrap").get<bool>();
    for (const auto& jt : j.at("trees")) {
      Tree t;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode nd;
        nd.value = jn.at("value").get<double>();
        nd.cover = jn.at("cover").get<double>();
        if (jn.contains("feature")) {
          nd.feature = jn["feature"].get<int>();
          nd.threshold = jn.at("threshold").get<double>();
          nd.left = jn.at("left").get<int>();
          nd.right = jn.at("right").get<int>();
          nd.gain = jn.at("gain").get<double>();
        }
        t.nodes.push_back(nd);
      }
      const auto count = static_cast<int>(t.nodes.size());
      for (const TreeNode& nd : t.nodes) {
        if (nd.is_leaf()) continue;
        if (nd.feature >= static_cast<int>(m.dim) || nd.left <= 0 || nd.right <= 0 || nd.left >= count ||
            nd.right >= count || !std::isfinite(nd.threshold)) {
          fail(ErrorKind::ParseError, "model contains an invalid node");
        }
      }
      if (t.nodes.empty()) fail(ErrorKind::ParseError, "model contains an empty tree");
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("malformed model file: ") + e.what());
  }
  return m;
}

void save_model(const std::filesystem::path& path, const TreeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << model_to_json(model);
}

TreeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace prosody
