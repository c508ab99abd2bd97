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

#ifndef PROSODY_TREES_HPP
#define PROSODY_TREES_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace prosody {

/// Non-owning row-major matrix.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  MatrixView() = default;
  MatrixView(std::span<const double> d, std::size_t r, std::size_t c);
  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Flat node. Leaves have feature == -1. For classification trees `value`
/// is the weighted ASD fraction at the leaf; for boosted trees it is the
/// (already shrunk) additive log-odds contribution.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double gain = 0.0;
  double cover = 0.0;  // weighted training rows reaching the node
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Index of the leaf reached by x (x <= threshold goes left).
  std::size_t leaf_index(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

struct ClassWeights {
  double asd = 1.0;
  double td = 1.0;

  double of(int label) const { return label == 1 ? asd : td; }
  bool operator==(const ClassWeights&) const = default;
};

/// w_c = n_total / (2 n_c). Unit weights when a class is absent.
ClassWeights inverse_frequency_weights(std::span<const int> labels);

struct CartConfig {
  int max_depth = -1;  // -1: unbounded
  std::size_t min_leaf = 1;
  bool parallel = true;
};

struct ForestConfig {
  int n_trees = 300;
  int max_depth = -1;
  std::size_t min_leaf = 2;
  std::size_t features_per_split = 0;  // 0: floor(sqrt(dim))
  bool bootstrap = true;
  bool class_weighting = true;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct BoostConfig {
  int n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 4;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;
  bool class_weighting = true;
  std::uint64_t seed = 0;
  bool parallel = true;
};

enum class ModelKind { Cart, Forest, Boosted };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// A fitted tree model of any of the three families. Immutable once fitted
/// and safe to share across threads.
struct TreeModel {
  ModelKind kind = ModelKind::Cart;
  std::vector<Tree> trees;
  std::size_t dim = 0;
  std::string schema_version;
  std::uint64_t seed = 0;
  ClassWeights class_weights;
  // boosted only
  double base_score = 0.0;
  double learning_rate = 0.0;
  double l2_lambda = 0.0;
  double min_child_weight = 0.0;
  // all kinds
  int max_depth = -1;
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 0;
  bool bootstrap = false;

  /// Boosted: log-odds margin. Forest: ASD vote fraction. Cart: leaf
  /// probability. `max_trees` truncates the ensemble.
  std::vector<double> predict_raw(const MatrixView& X, std::size_t max_trees = SIZE_MAX) const;
  std::vector<double> predict_proba(const MatrixView& X) const;
  std::vector<int> predict(const MatrixView& X, double threshold = 0.5) const;

  bool operator==(const TreeModel&) const = default;
};

/// Exact greedy weighted-Gini tree.
Tree fit_cart(const MatrixView& X, std::span<const int> y, std::span<const double> weights,
              const CartConfig& cfg = {});
TreeModel fit_cart_model(const MatrixView& X, std::span<const int> y, std::span<const double> weights,
                         const CartConfig& cfg = {});
TreeModel fit_forest(const MatrixView& X, std::span<const int> y, const ForestConfig& cfg = {});
TreeModel fit_boosted(const MatrixView& X, std::span<const int> y, const BoostConfig& cfg = {});

/// Weighted mean log-loss of probabilities against labels.
double log_loss(std::span<const double> proba, std::span<const int> y, std::span<const double> weights = {});

double sigmoid(double z);

std::string model_to_json(const TreeModel& model);
TreeModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const TreeModel& model);
TreeModel load_model(const std::filesystem::path& path);

}  // namespace prosody

#endif  // PROSODY_TREES_HPP
