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

#include "prosody/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "prosody/error.hpp"
#include "prosody/rng.hpp"

namespace prosody {

namespace {

void normalize(std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total > 0.0) {
    for (double& x : v) x /= total;
  }
}

void require_fitted(const TreeModel& model) {
  if (model.dim == 0 || (model.trees.empty() && model.kind != ModelKind::Boosted)) {
    fail(ErrorKind::UnfittedModel, "model has not been fitted");
  }
}

// Leaf output in the raw-score space the model predicts in.
double leaf_output(const TreeModel& model, const TreeNode& leaf) {
  switch (model.kind) {
    case ModelKind::Forest: return (leaf.value >= 0.5 ? 1.0 : 0.0) / static_cast<double>(model.trees.size());
    case ModelKind::Cart:
    case ModelKind::Boosted: return leaf.value;
  }
  return leaf.value;
}

double expected_value(const TreeModel& model, const Tree& tree) {
  double total = 0.0;
  for (const TreeNode& nd : tree.nodes) {
    if (nd.is_leaf()) total += nd.cover * leaf_output(model, nd);
  }
  return total / tree.nodes[0].cover;
}

// Path-dependent TreeSHAP, after Lundberg et al. The path holds, for each
// distinct feature on the way to the current node, the fraction of
// "zero" (feature absent, cover-weighted) and "one" (feature present, follow
// x) paths, plus the permutation weights of subsets of each size.
struct PathElement {
  int feature = -1;
  double zero = 0.0;
  double one = 0.0;
  double weight = 0.0;
};

void extend_path(std::vector<PathElement>& path, std::size_t depth, double zero, double one, int feature) {
  path[depth] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
  const double d1 = static_cast<double>(depth + 1);
  for (std::size_t i = depth; i-- > 0;) {
    path[i + 1].weight += one * path[i].weight * static_cast<double>(i + 1) / d1;
    path[i].weight = zero * path[i].weight * static_cast<double>(depth - i) / d1;
  }
}

void unwind_path(std::vector<PathElement>& path, std::size_t depth, std::size_t index) {
  const double one = path[index].one;
  const double zero = path[index].zero;
  const double d1 = static_cast<double>(depth + 1);
  double next = path[depth].weight;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * d1 / (static_cast<double>(i + 1) * one);
      next = tmp - path[i].weight * zero * static_cast<double>(depth - i) / d1;
    } else {
      path[i].weight = path[i].weight * d1 / (zero * static_cast<double>(depth - i));
    }
  }
  for (std::size_t i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero = path[i + 1].zero;
    path[i].one = path[i + 1].one;
  }
}

double unwound_sum(const std::vector<PathElement>& path, std::size_t depth, std::size_t index) {
  const double one = path[index].one;
  const double zero = path[index].zero;
  const double d1 = static_cast<double>(depth + 1);
  double next = path[depth].weight;
  double total = 0.0;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = next * d1 / (static_cast<double>(i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * static_cast<double>(depth - i) / d1;
    } else {
      total += path[i].weight / zero / (static_cast<double>(depth - i) / d1);
    }
  }
  return total;
}

void shap_recurse(const TreeModel& model, const Tree& tree, std::size_t node, std::span<const double> x,
                  std::vector<double>& phi, std::vector<PathElement> path, std::size_t depth, double zero,
                  double one, int feature) {
  if (path.size() < depth + 1) path.resize(depth + 1);
  extend_path(path, depth, zero, one, feature);
  const TreeNode& nd = tree.nodes[node];
  if (nd.is_leaf()) {
    const double out = leaf_output(model, nd);
    for (std::size_t i = 1; i <= depth; ++i) {
      const double w = unwound_sum(path, depth, i);
      phi[static_cast<std::size_t>(path[i].feature)] += w * (path[i].one - path[i].zero) * out;
    }
    return;
  }
  const auto f = static_cast<std::size_t>(nd.feature);
  const bool go_left = x[f] <= nd.threshold;
  const auto hot = static_cast<std::size_t>(go_left ? nd.left : nd.right);
  const auto cold = static_cast<std::size_t>(go_left ? nd.right : nd.left);
  const double hot_zero = tree.nodes[hot].cover / nd.cover;
  const double cold_zero = tree.nodes[cold].cover / nd.cover;

  double incoming_zero = 1.0, incoming_one = 1.0;
  std::size_t index = 0;
  while (index <= depth && path[index].feature != nd.feature) ++index;
  if (index <= depth) {
    incoming_zero = path[index].zero;
    incoming_one = path[index].one;
    unwind_path(path, depth, index);
    --depth;
  }
  shap_recurse(model, tree, hot, x, phi, path, depth + 1, hot_zero * incoming_zero, incoming_one, nd.feature);
  shap_recurse(model, tree, cold, x, phi, path, depth + 1, cold_zero * incoming_zero, 0.0, nd.feature);
}

double metric_of(std::span<const int> y, std::span<const int> pred, PermutationMetric metric) {
  const Metrics m = compute_metrics(y, pred);
  return metric == PermutationMetric::F1 ? m.f1 : m.accuracy;
}

std::vector<double> gather_rows(const FeatureTable& table, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * table.dim());
  for (std::size_t r : rows) {
    const auto v = table.row(r);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string to_string(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::CartImpurity: return "cart_impurity";
    case ImportanceMethod::ForestImpurity: return "forest_impurity";
    case ImportanceMethod::BoostedGain: return "boosted_gain";
    case ImportanceMethod::TreeShap: return "tree_shap";
    case ImportanceMethod::Permutation: return "permutation";
  }
  return "?";
}

std::vector<std::size_t> ImportanceScores::ranks() const {
  std::vector<std::size_t> r(ranking.size());
  for (std::size_t i = 0; i < ranking.size(); ++i) r[ranking[i]] = i + 1;
  return r;
}

ImportanceScores make_scores(ImportanceMethod method, std::vector<double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorKind::NonFiniteFeature, "importance score is not finite");
  }
  ImportanceScores out;
  out.method = method;
  out.ranking.resize(scores.size());
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  out.scores = std::move(scores);
  return out;
}

ImportanceScores gain_importance(const TreeModel& model) {
  require_fitted(model);
  std::vector<double> s(model.dim, 0.0);
  for (const Tree& t : model.trees) {
    for (const TreeNode& nd : t.nodes) {
      if (!nd.is_leaf()) s[static_cast<std::size_t>(nd.feature)] += nd.gain;
    }
  }
  normalize(s);
  const ImportanceMethod m = model.kind == ModelKind::Cart     ? ImportanceMethod::CartImpurity
                             : model.kind == ModelKind::Forest ? ImportanceMethod::ForestImpurity
                                                               : ImportanceMethod::BoostedGain;
  return make_scores(m, std::move(s));
}

ImportanceScores cart_importance(const TreeModel& model) {
  if (model.kind != ModelKind::Cart) fail(ErrorKind::MethodMismatch, "cart_importance needs a cart model");
  return gain_importance(model);
}

ImportanceScores forest_importance(const TreeModel& model) {
  if (model.kind != ModelKind::Forest) fail(ErrorKind::MethodMismatch, "forest_importance needs a forest model");
  return gain_importance(model);
}

ImportanceScores boosted_gain_importance(const TreeModel& model) {
  if (model.kind != ModelKind::Boosted) fail(ErrorKind::MethodMismatch, "boosted_gain_importance needs a boosted model");
  return gain_importance(model);
}

ShapValues tree_shap(const TreeModel& model, std::span<const double> x) {
  require_fitted(model);
  if (x.size() != model.dim) {
    fail(ErrorKind::DimensionMismatch, "input has " + std::to_string(x.size()) + " features, model expects " +
                                           std::to_string(model.dim));
  }
  ShapValues out;
  out.values.assign(model.dim, 0.0);
  out.baseline = model.kind == ModelKind::Boosted ? model.base_score : 0.0;
  for (const Tree& t : model.trees) {
    out.baseline += expected_value(model, t);
    std::vector<PathElement> path(t.depth() + 2);
    shap_recurse(model, t, 0, x, out.values, std::move(path), 0, 1.0, 1.0, -1);
  }
  return out;
}

ImportanceScores shap_importance(const TreeModel& model, const MatrixView& X, bool parallel) {
  require_fitted(model);
  if (X.cols != model.dim) fail(ErrorKind::DimensionMismatch, "input width does not match model");
  std::vector<std::vector<double>> per_row(X.rows);
  const auto n = static_cast<std::ptrdiff_t>(X.rows);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    per_row[static_cast<std::size_t>(r)] = tree_shap(model, X.row(static_cast<std::size_t>(r))).values;
  }
  std::vector<double> s(model.dim, 0.0);
  for (const auto& v : per_row) {
    for (std::size_t j = 0; j < v.size(); ++j) s[j] += std::abs(v[j]);
  }
  if (X.rows > 0) {
    for (double& v : s) v /= static_cast<double>(X.rows);
  }
  normalize(s);
  return make_scores(ImportanceMethod::TreeShap, std::move(s));
}

ImportanceScores permutation_importance(const TreeModel& model, const MatrixView& X, std::span<const int> y,
                                        int n_repeats, std::uint64_t seed, PermutationMetric metric,
                                        bool parallel) {
  require_fitted(model);
  if (n_repeats < 1) fail(ErrorKind::InvalidArgument, "n_repeats must be at least 1");
  if (y.size() != X.rows) fail(ErrorKind::LengthMismatch, "label count does not match rows");
  if (X.rows == 0) fail(ErrorKind::Empty, "permutation importance needs rows");
  const double baseline = metric_of(y, model.predict(X), metric);

  std::vector<double> s(X.cols, 0.0);
  const auto d = static_cast<std::ptrdiff_t>(X.cols);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t jj = 0; jj < d; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    std::vector<double> work(X.data.begin(), X.data.end());
    std::vector<double> column(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) column[r] = X.at(r, j);
    double total = 0.0;
    for (int rep = 0; rep < n_repeats; ++rep) {
      Rng rng(derive_seed(seed, j * static_cast<std::size_t>(n_repeats) + static_cast<std::size_t>(rep)));
      std::vector<double> shuffled = column;
      rng.shuffle(std::span<double>(shuffled));
      for (std::size_t r = 0; r < X.rows; ++r) work[r * X.cols + j] = shuffled[r];
      total += metric_of(y, model.predict(MatrixView(work, X.rows, X.cols)), metric);
    }
    s[j] = baseline - total / n_repeats;
  }
  return make_scores(ImportanceMethod::Permutation, std::move(s));
}

ImportanceScores aggregate_fold_scores(std::span<const ImportanceScores> folds) {
  if (folds.empty()) fail(ErrorKind::Empty, "no fold scores to aggregate");
  const std::size_t dim = folds[0].scores.size();
  std::vector<double> mean_rank(dim, 0.0);
  for (const auto& f : folds) {
    if (f.method != folds[0].method || f.scores.size() != dim) {
      fail(ErrorKind::MethodMismatch, "fold scores mix methods or dimensions");
    }
    const auto r = f.ranks();
    for (std::size_t j = 0; j < dim; ++j) mean_rank[j] += static_cast<double>(r[j]);
  }
  std::vector<double> s(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    s[j] = static_cast<double>(dim + 1) - mean_rank[j] / static_cast<double>(folds.size());
  }
  return make_scores(folds[0].method, std::move(s));
}

ConsensusTable consensus(std::span<const ImportanceScores> scores, std::span<const std::string> feature_names,
                         std::size_t per_method_cutoff, const std::string& scope) {
  if (scores.size() < 2) fail(ErrorKind::MethodMismatch, "consensus needs at least 2 methods");
  const std::size_t dim = scores[0].ranking.size();
  for (const auto& s : scores) {
    if (s.ranking.size() != dim) fail(ErrorKind::MethodMismatch, "methods disagree on feature count");
  }
  if (!feature_names.empty() && feature_names.size() != dim) {
    fail(ErrorKind::MethodMismatch, "feature names do not match score dimension");
  }

  ConsensusTable table;
  table.scope = scope;
  table.rows.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    table.rows[j].feature = j;
    table.rows[j].name = feature_names.empty() ? std::to_string(j) : feature_names[j];
    table.rows[j].best_rank = dim + 1;
  }
  for (const auto& s : scores) {
    table.methods.push_back(s.method);
    const auto r = s.ranks();
    for (std::size_t j = 0; j < dim; ++j) {
      table.rows[j].avg_rank += static_cast<double>(r[j]);
      table.rows[j].best_rank = std::min(table.rows[j].best_rank, r[j]);
      if (r[j] <= per_method_cutoff) ++table.rows[j].n_methods;
    }
  }
  for (auto& row : table.rows) row.avg_rank /= static_cast<double>(scores.size());

  std::vector<std::size_t> supported;
  for (std::size_t j = 0; j < dim; ++j) {
    if (table.rows[j].n_methods >= 2) supported.push_back(j);
  }
  std::sort(supported.begin(), supported.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = table.rows[a];
    const auto& rb = table.rows[b];
    if (ra.avg_rank != rb.avg_rank) return ra.avg_rank < rb.avg_rank;
    if (ra.best_rank != rb.best_rank) return ra.best_rank < rb.best_rank;
    return a < b;
  });
  for (std::size_t i = 0; i < supported.size() && i < 5; ++i) {
    table.top5.push_back(supported[i]);
    table.top5_names.push_back(table.rows[supported[i]].name);
    table.rows[supported[i]].in_top5 = true;
  }
  return table;
}

ImportanceRun run_importance(const FeatureTable& table, const ImportanceConfig& cfg, const std::string& scope,
                             std::uint64_t seed) {
  if (table.empty()) fail(ErrorKind::EmptyTable, "cannot compute importance on an empty table");
  const SplitPlan plan = plan_speaker_folds(table.speakers(), cfg.nominal_k, seed);
  const auto labels = table.labels();

  constexpr std::size_t kMethods = 5;
  std::vector<std::vector<ImportanceScores>> per_method(kMethods);
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto train = rows_for_speakers(table, plan.folds[f].train_speakers);
    auto test = rows_for_speakers(table, plan.folds[f].test_speakers);
    const auto Xtr = gather_rows(table, train);
    std::vector<int> ytr(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) ytr[i] = labels[train[i]];
    const MatrixView Xt(Xtr, train.size(), table.dim());
    const std::uint64_t fold_seed = derive_seed(seed, f);

    ModelSpec spec = cfg.model;
    spec.kind = ModelKind::Cart;
    const TreeModel cart = fit_model(spec, Xt, ytr, fold_seed);
    spec.kind = ModelKind::Forest;
    const TreeModel forest = fit_model(spec, Xt, ytr, fold_seed);
    spec.kind = ModelKind::Boosted;
    const TreeModel boosted = fit_model(spec, Xt, ytr, fold_seed);
    per_method[0].push_back(gain_importance(cart));
    per_method[1].push_back(gain_importance(forest));
    per_method[2].push_back(gain_importance(boosted));

    const TreeModel& explained = cfg.model.kind == ModelKind::Forest ? forest
                                 : cfg.model.kind == ModelKind::Cart ? cart
                                                                     : boosted;
    const auto Xte = gather_rows(table, test);
    std::vector<int> yte(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) yte[i] = labels[test[i]];
    const MatrixView Xe(Xte, test.size(), table.dim());

    // SHAP is the expensive one; an evenly strided subset of test rows keeps
    // it bounded without randomness.
    std::vector<std::size_t> pick;
    const std::size_t cap = std::max<std::size_t>(1, cfg.shap_max_rows);
    if (test.size() <= cap) {
      pick.resize(test.size());
      std::iota(pick.begin(), pick.end(), 0);
    } else {
      for (std::size_t i = 0; i < cap; ++i) pick.push_back(i * test.size() / cap);
    }
    std::vector<double> Xs;
    for (std::size_t i : pick) {
      const auto v = Xe.row(i);
      Xs.insert(Xs.end(), v.begin(), v.end());
    }
    per_method[3].push_back(shap_importance(explained, MatrixView(Xs, pick.size(), table.dim())));
    per_method[4].push_back(permutation_importance(explained, Xe, yte, cfg.n_repeats, derive_seed(fold_seed, 1)));
  }

  ImportanceRun run;
  for (const auto& m : per_method) run.methods.push_back(aggregate_fold_scores(m));
  run.table = consensus(run.methods, table.feature_names(), cfg.per_method_cutoff, scope);
  return run;
}

std::string consensus_to_csv(const ConsensusTable& table) {
  std::vector<std::size_t> order(table.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = table.rows[a];
    const auto& rb = table.rows[b];
    if (ra.avg_rank != rb.avg_rank) return ra.avg_rank < rb.avg_rank;
    return ra.best_rank < rb.best_rank;
  });
  std::string out = "feature_name,avg_rank,best_rank,n_methods,in_top5\n";
  for (std::size_t i : order) {
    const auto& r = table.rows[i];
    out += r.name + "," + fmt(r.avg_rank) + "," + std::to_string(r.best_rank) + "," + std::to_string(r.n_methods) +
           "," + (r.in_top5 ? "1" : "0") + "\n";
  }
  return out;
}

std::string consensus_to_json(const ConsensusTable& table, std::span<const ImportanceScores> methods) {
  nlohmann::ordered_json j;
  j["scope"] = table.scope;
  j["methods"] = nlohmann::ordered_json::array();
  for (auto m : table.methods) j["methods"].push_back(to_string(m));
  j["consensus_top5"] = table.top5_names;
  auto& feats = j["features"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    feats.push_back({{"feature_name", r.name},
                     {"avg_rank", r.avg_rank},
                     {"best_rank", r.best_rank},
                     {"n_methods", r.n_methods},
                     {"in_top5", r.in_top5}});
  }
  if (!methods.empty()) {
    auto& ms = j["method_scores"] = nlohmann::ordered_json::object();
    for (const auto& m : methods) ms[to_string(m.method)] = m.scores;
  }
  return j.dump(2) + "\n";
}

}  // namespace prosody
