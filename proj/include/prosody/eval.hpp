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

#ifndef PROSODY_EVAL_HPP
#define PROSODY_EVAL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prosody/corpus.hpp"
#include "prosody/trees.hpp"

namespace prosody {

/// Speakers are identified by "<language>/<speaker_id>" so ids may repeat
/// across corpora.
std::string speaker_key(const SpeakerMeta& s);

struct Fold {
  std::vector<std::string> train_speakers;  // sorted keys
  std::vector<std::string> test_speakers;   // sorted keys
};

struct SplitPlan {
  std::vector<Fold> folds;
  int nominal_k = 5;
  int effective_k = 0;
  std::uint64_t seed = 0;
};

/// Shuffle each class by seed, deal round-robin over k folds (the fold
/// counter carries over from ASD to TD), and lower k until every fold and
/// its complement hold both classes.
SplitPlan plan_speaker_folds(std::span<const SpeakerMeta> speakers, int nominal_k = 5, std::uint64_t seed = 0);

struct Confusion {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;

  std::size_t total() const { return tp + fn + fp + tn; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;        // ASD-positive
  double macro_f1 = 0.0;  // mean of ASD- and TD-positive F1
  Confusion cm;
};

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred);
Metrics metrics_from_confusion(const Confusion& cm);

/// Which family to fit, with its hyperparameters. Seeds inside the configs
/// are replaced per fold from the run seed.
struct ModelSpec {
  ModelKind kind = ModelKind::Boosted;
  CartConfig cart;
  ForestConfig forest;
  BoostConfig boost;
};

/// Class weights come from the training labels only.
TreeModel fit_model(const ModelSpec& spec, const MatrixView& X, std::span<const int> y, std::uint64_t seed);

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> test_speakers;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  ClassWeights weights;
  Metrics utterance;
  Metrics speaker;  // majority vote per test speaker; secondary view
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct MetricsReport {
  std::string scope;  // language name, "POOLED", or "LOCO-<language>"
  ModelKind model = ModelKind::Boosted;
  int nominal_k = 0;
  int effective_k = 0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  Aggregate accuracy, f1, macro_f1, speaker_accuracy, speaker_f1;
  Confusion total_cm;  // summed over folds
};

/// One fitted fold: the model and the table rows on each side.
struct FoldRun {
  std::size_t fold = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  TreeModel model;
};

/// Row indices of `table` whose speaker key is in `keys` (sorted).
std::vector<std::size_t> rows_for_speakers(const FeatureTable& table, std::span<const std::string> keys);

std::vector<FoldRun> fit_plan(const FeatureTable& table, const SplitPlan& plan, const ModelSpec& spec,
                              std::uint64_t seed);

MetricsReport run_within_language(const FeatureTable& table, const std::string& language, const ModelSpec& spec,
                                  int nominal_k = 5, std::uint64_t seed = 0);
MetricsReport run_pooled(const FeatureTable& table, const ModelSpec& spec, int nominal_k = 5,
                         std::uint64_t seed = 0);
std::vector<MetricsReport> run_loco(const FeatureTable& table, const ModelSpec& spec, std::uint64_t seed = 0);

std::string report_to_json(const MetricsReport& report);
/// One row per fold plus a "mean" and "std" row.
std::string report_to_csv(const MetricsReport& report);

}  // namespace prosody

#endif  // PROSODY_EVAL_HPP
