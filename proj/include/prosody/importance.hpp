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

#ifndef PROSODY_IMPORTANCE_HPP
#define PROSODY_IMPORTANCE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prosody/corpus.hpp"
#include "prosody/eval.hpp"
#include "prosody/trees.hpp"

namespace prosody {

enum class ImportanceMethod { CartImpurity, ForestImpurity, BoostedGain, TreeShap, Permutation };
std::string to_string(ImportanceMethod m);

struct ImportanceScores {
  ImportanceMethod method = ImportanceMethod::CartImpurity;
  std::vector<double> scores;
  std::vector<std::size_t> ranking;  // descending score, ties by index

  /// 1-based rank of each feature.
  std::vector<std::size_t> ranks() const;
};

/// Builds the ranking from raw scores.
ImportanceScores make_scores(ImportanceMethod method, std::vector<double> scores);

/// Sum of split gains per feature over all trees, normalized to sum 1.
/// Dispatches on the model kind (cart / forest / boosted).
ImportanceScores gain_importance(const TreeModel& model);
ImportanceScores cart_importance(const TreeModel& model);
ImportanceScores forest_importance(const TreeModel& model);
ImportanceScores boosted_gain_importance(const TreeModel& model);

struct ShapValues {
  double baseline = 0.0;
  std::vector<double> values;
};

/// Path-dependent TreeSHAP on the raw model output (log-odds for boosted,
/// vote fraction for forest, leaf probability for cart).
ShapValues tree_shap(const TreeModel& model, std::span<const double> x);

/// Mean |SHAP| per feature over the rows of X, normalized to sum 1.
ImportanceScores shap_importance(const TreeModel& model, const MatrixView& X, bool parallel = true);

enum class PermutationMetric { F1, Accuracy };

/// baseline metric minus mean metric with one column shuffled.
ImportanceScores permutation_importance(const TreeModel& model, const MatrixView& X, std::span<const int> y,
                                        int n_repeats = 5, std::uint64_t seed = 0,
                                        PermutationMetric metric = PermutationMetric::F1, bool parallel = true);

/// Rank aggregation of one method's scores across folds: score = dim + 1 -
/// mean rank.
ImportanceScores aggregate_fold_scores(std::span<const ImportanceScores> folds);

struct ConsensusRow {
  std::size_t feature = 0;
  std::string name;
  double avg_rank = 0.0;
  std::size_t best_rank = 0;
  std::size_t n_methods = 0;  // methods ranking it within the cutoff
  bool in_top5 = false;
};

struct ConsensusTable {
  std::string scope;
  std::vector<ImportanceMethod> methods;
  std::vector<ConsensusRow> rows;  // one per feature, feature order
  std::vector<std::size_t> top5;   // feature indices
  std::vector<std::string> top5_names;
};

ConsensusTable consensus(std::span<const ImportanceScores> scores, std::span<const std::string> feature_names,
                         std::size_t per_method_cutoff = 10, const std::string& scope = "");

struct ImportanceConfig {
  // `model.kind` picks the family for TreeSHAP and permutation importance;
  // the three configs inside are used for the gain-based methods.
  ModelSpec model;
  int nominal_k = 5;
  std::size_t per_method_cutoff = 10;
  int n_repeats = 5;
  std::size_t shap_max_rows = 256;
};

struct ImportanceRun {
  std::vector<ImportanceScores> methods;  // fold-aggregated, one per method
  ConsensusTable table;
};

/// Speaker-disjoint folds over `table`; each fold fits cart, forest and
/// boosted models on its training side, SHAP and permutation importance
/// are computed on its test side.
ImportanceRun run_importance(const FeatureTable& table, const ImportanceConfig& cfg, const std::string& scope,
                             std::uint64_t seed);

std::string consensus_to_csv(const ConsensusTable& table);
std::string consensus_to_json(const ConsensusTable& table, std::span<const ImportanceScores> methods = {});

}  // namespace prosody

#endif  // PROSODY_IMPORTANCE_HPP
