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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "prosody/error.hpp"
#include "prosody/importance.hpp"
#include "prosody/rng.hpp"
#include "shap_oracle.hpp"

using namespace prosody;

namespace {

// Scores realising a given 1-based rank per feature.
ImportanceScores from_ranks(ImportanceMethod m, const std::vector<std::size_t>& ranks) {
  std::vector<double> s(ranks.size());
  for (std::size_t j = 0; j < ranks.size(); ++j) s[j] = static_cast<double>(ranks.size() + 1 - ranks[j]);
  return make_scores(m, s);
}

const ImportanceMethod kAll[] = {ImportanceMethod::CartImpurity, ImportanceMethod::ForestImpurity,
                                 ImportanceMethod::BoostedGain, ImportanceMethod::TreeShap,
                                 ImportanceMethod::Permutation};

}  // namespace

TEST_CASE("make_scores ranks descending with index tie-break") {
  const ImportanceScores s = make_scores(ImportanceMethod::TreeShap, {0.1, 0.5, 0.5, 0.0});
  CHECK(s.ranking == std::vector<std::size_t>{1, 2, 0, 3});
  CHECK(s.ranks() == std::vector<std::size_t>{3, 1, 2, 4});
}

TEST_CASE("gain importance on hand-built trees") {
  TreeModel m;
  m.kind = ModelKind::Cart;
  m.dim = 10;
  m.trees.push_back(Tree{{TreeNode{}}});
  const auto zero = cart_importance(m);
  CHECK(std::all_of(zero.scores.begin(), zero.scores.end(), [](double v) { return v == 0.0; }));

  Tree t;
  t.nodes = {TreeNode{7, 0.0, 1, 2, 3.0, 10.0, 0.5}, TreeNode{-1, 0, -1, -1, 0, 5, 0}, TreeNode{-1, 0, -1, -1, 0, 5, 1}};
  m.trees[0] = t;
  const auto s = cart_importance(m);
  CHECK(s.scores[7] == doctest::Approx(1.0));
  CHECK(s.ranking[0] == 7);
  CHECK_THROWS_AS(forest_importance(m), Error);
  CHECK_THROWS_AS(boosted_gain_importance(m), Error);
  TreeModel empty;
  empty.kind = ModelKind::Forest;
  CHECK_THROWS_AS(gain_importance(empty), Error);
}

TEST_CASE("forest importance finds the label column") {
  Rng rng(3);
  const std::size_t n = 300, d = 8;
  std::vector<double> x(n * d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.uniform() < 0.5;
    for (std::size_t c = 0; c < d; ++c) x[i * d + c] = rng.normal();
    x[i * d + 3] = y[i] + 0.1 * rng.normal();
  }
  ForestConfig fc;
  fc.n_trees = 50;
  const TreeModel m = fit_forest(MatrixView(x, n, d), y, fc);
  const auto s = forest_importance(m);
  CHECK(s.scores[3] > s.scores[5]);
  CHECK(s.ranking[0] == 3);
  CHECK(std::accumulate(s.scores.begin(), s.scores.end(), 0.0) == doctest::Approx(1.0));

  const auto perm = permutation_importance(m, MatrixView(x, n, d), y, 5, 1, PermutationMetric::F1);
  CHECK(perm.ranking[0] == 3);
  CHECK_THROWS_AS(permutation_importance(m, MatrixView(x, n, d), y, 0, 1), Error);

  // A constant column cannot matter.
  for (std::size_t i = 0; i < n; ++i) x[i * d + 6] = 1.0;
  const TreeModel m2 = fit_forest(MatrixView(x, n, d), y, fc);
  const auto perm2 = permutation_importance(m2, MatrixView(x, n, d), y, 5, 2);
  CHECK(std::abs(perm2.scores[6]) < 0.02);
  CHECK(perm2.scores == permutation_importance(m2, MatrixView(x, n, d), y, 5, 2, PermutationMetric::F1, false).scores);
}

TEST_CASE("TreeSHAP on a single leaf and a stump") {
  TreeModel m;
  m.kind = ModelKind::Boosted;
  m.dim = 3;
  m.trees.push_back(Tree{{TreeNode{-1, 0, -1, -1, 0, 10, 0.7}}});
  const std::vector<double> x = {1.0, 2.0, 3.0};
  const ShapValues c = tree_shap(m, x);
  CHECK(c.baseline == doctest::Approx(0.7));
  for (double v : c.values) CHECK(v == 0.0);

  const double a = -0.4, b = 0.9, p = 0.3;
  m.trees[0].nodes = {TreeNode{1, 0.5, 1, 2, 1.0, 10.0, 0.0}, TreeNode{-1, 0, -1, -1, 0, 10 * p, a},
                      TreeNode{-1, 0, -1, -1, 0, 10 * (1 - p), b}};
  const ShapValues s = tree_shap(m, x);  // x[1] = 2 goes right
  CHECK(s.values[1] == doctest::Approx(b - (p * a + (1 - p) * b)));
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[2] == 0.0);
  CHECK_THROWS_AS(tree_shap(m, std::vector<double>{1.0}), Error);
}

TEST_CASE("TreeSHAP matches brute-force Shapley on random ensembles") {
  Rng rng(99);
  for (int e = 0; e < 15; ++e) {
    TreeModel m;
    m.kind = e % 3 == 0 ? ModelKind::Forest : ModelKind::Boosted;
    m.dim = 1 + rng.index(4);
    m.base_score = rng.uniform(-1.0, 1.0);
    const int n_trees = 1 + static_cast<int>(rng.index(5));
    for (int t = 0; t < n_trees; ++t) m.trees.push_back(oracle::random_tree(rng, m.dim, 3));
    if (m.kind == ModelKind::Forest) {
      for (auto& t : m.trees)
        for (auto& nd : t.nodes) nd.value = (nd.value + 1.0) / 2.0;
    }
    for (int k = 0; k < 30; ++k) {
      std::vector<double> x(m.dim);
      for (double& v : x) v = std::round(rng.uniform(-1.2, 1.2) * 8.0) / 8.0;
      const ShapValues s = tree_shap(m, x);
      const auto want = oracle::shapley(m, x);
      for (std::size_t j = 0; j < m.dim; ++j) CHECK(s.values[j] == doctest::Approx(want[j]).epsilon(1e-9).scale(1));
      const double raw = m.predict_raw(MatrixView(x, 1, m.dim))[0];
      CHECK(std::abs(s.baseline + std::accumulate(s.values.begin(), s.values.end(), 0.0) - raw) <= 1e-9);
      CHECK(s.baseline == doctest::Approx(oracle::value_of(m, x, 0)));
    }
  }
}

TEST_CASE("consensus by hand") {
  // Feature 0 = A with ranks {1,2,50,60,70}; feature 1 = B at 3 everywhere.
  const std::size_t dim = 88;
  std::vector<ImportanceScores> methods;
  const std::size_t a_ranks[] = {1, 2, 50, 60, 70};
  for (int m = 0; m < 5; ++m) {
    std::vector<std::size_t> r(dim);
    std::vector<std::size_t> rest;
    for (std::size_t k = 1; k <= dim; ++k) {
      if (k != a_ranks[m] && k != 3) rest.push_back(k);
    }
    r[0] = a_ranks[m];
    r[1] = 3;
    for (std::size_t j = 2; j < dim; ++j) r[j] = rest[j - 2];
    methods.push_back(from_ranks(kAll[m], r));
  }
  const ConsensusTable t = consensus(methods, {}, 10, "X");
  CHECK(t.rows[0].avg_rank == doctest::Approx(36.6));
  CHECK(t.rows[1].avg_rank == doctest::Approx(3.0));
  CHECK(t.rows[0].best_rank == 1);
  CHECK(t.rows[0].n_methods == 2);
  const auto pos_a = std::find(t.top5.begin(), t.top5.end(), 0);
  const auto pos_b = std::find(t.top5.begin(), t.top5.end(), 1);
  REQUIRE(pos_b != t.top5.end());
  CHECK((pos_a == t.top5.end() || pos_b < pos_a));
}

TEST_CASE("unanimous rankings and the two-method rule") {
  const std::size_t dim = 20;
  std::vector<std::size_t> base(dim);
  std::iota(base.begin(), base.end(), 1);
  std::vector<ImportanceScores> same;
  for (auto m : kAll) same.push_back(from_ranks(m, base));
  const ConsensusTable t = consensus(same, {});
  CHECK(t.top5 == std::vector<std::size_t>{0, 1, 2, 3, 4});

  // Feature 19 is rank 1 for one method only and last elsewhere.
  std::vector<ImportanceScores> lone = same;
  std::vector<std::size_t> r(dim);
  r[19] = 1;
  for (std::size_t j = 0; j < 19; ++j) r[j] = j + 2;
  lone[0] = from_ranks(kAll[0], r);
  const ConsensusTable t2 = consensus(lone, {});
  CHECK(t2.rows[19].n_methods == 1);
  CHECK(std::find(t2.top5.begin(), t2.top5.end(), 19) == t2.top5.end());
}

TEST_CASE("consensus depends only on rankings") {
  Rng rng(8);
  std::vector<ImportanceScores> methods;
  for (auto m : kAll) {
    std::vector<double> s(30);
    for (double& v : s) v = rng.uniform();
    methods.push_back(make_scores(m, s));
  }
  const ConsensusTable a = consensus(methods, {});
  for (std::size_t k = 0; k < methods.size(); ++k) {
    auto scaled = methods;
    std::vector<double> s = scaled[k].scores;
    for (double& v : s) v = 10.0 * v + 3.0;
    scaled[k] = make_scores(scaled[k].method, s);
    const ConsensusTable b = consensus(scaled, {});
    CHECK(b.top5 == a.top5);
    CHECK(consensus_to_csv(b) == consensus_to_csv(a));
  }
  CHECK_THROWS_AS(consensus(std::span<const ImportanceScores>(methods).subspan(0, 1), {}), Error);
  auto bad = methods;
  bad[1] = make_scores(bad[1].method, {1.0, 2.0});
  CHECK_THROWS_AS(consensus(bad, {}), Error);
}

TEST_CASE("fold rank aggregation") {
  const auto a = make_scores(ImportanceMethod::TreeShap, {3.0, 2.0, 1.0});  // ranks 1 2 3
  const auto b = make_scores(ImportanceMethod::TreeShap, {1.0, 3.0, 2.0});  // ranks 3 1 2
  const std::vector<ImportanceScores> folds = {a, b};
  const auto agg = aggregate_fold_scores(folds);
  CHECK(agg.scores[0] == doctest::Approx(4.0 - 2.0));
  CHECK(agg.scores[1] == doctest::Approx(4.0 - 1.5));
  CHECK(agg.scores[2] == doctest::Approx(4.0 - 2.5));
  CHECK(agg.ranking[0] == 1);
}

TEST_CASE("run_importance end to end on a planted column") {
  const FeatureTable t = fixtures::random_table({"L"}, 6, 6, 12, 4, 3.0);
  ImportanceConfig cfg;
  cfg.model.forest.n_trees = 30;
  cfg.model.boost.n_rounds = 30;
  cfg.n_repeats = 2;
  const ImportanceRun run = run_importance(t, cfg, "L", 5);
  CHECK(run.methods.size() == 5);
  REQUIRE(!run.table.top5.empty());
  CHECK(run.table.top5[0] == 4);
  CHECK(run.table.top5_names[0] == t.feature_names()[4]);
  const std::string csv = consensus_to_csv(run.table);
  CHECK(csv.rfind("feature_name,avg_rank,best_rank,n_methods,in_top5", 0) == 0);
  CHECK(consensus_to_json(run.table, run.methods) ==
        consensus_to_json(run_importance(t, cfg, "L", 5).table, run_importance(t, cfg, "L", 5).methods));
}
