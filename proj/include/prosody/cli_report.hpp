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

#ifndef PROSODY_CLI_REPORT_HPP
#define PROSODY_CLI_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prosody/corpus.hpp"
#include "prosody/eval.hpp"
#include "prosody/features.hpp"
#include "prosody/importance.hpp"
#include "prosody/ipu_segmenter.hpp"
#include "prosody/synth.hpp"

namespace prosody {

/// Everything a run needs, parsed from one JSON document. Relative paths
/// resolve against the config file's directory.
struct ExperimentConfig {
  std::vector<std::filesystem::path> manifests;
  std::optional<SynthSpec> synth;
  std::filesystem::path table;  // optional precomputed feature table
  SegmenterConfig segmenter;
  ExtractorConfig extractor;
  int sample_rate = 16000;  // clips are resampled to this before analysis
  std::string schema_version = "prosody88-v1";
  ModelSpec model;
  int nominal_k = 5;
  std::uint64_t seed = 0;
  std::string mode = "within";
  ImportanceConfig importance;
  std::vector<std::string> importance_scopes;  // empty: every language plus ALL
  std::filesystem::path output_dir = "out";
};

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the config, without the output directory; this is
/// what the run hash covers.
std::string config_to_json(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view text);

/// All artifacts go through one writer, which also remembers what it wrote.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path root);
  const std::filesystem::path& root() const { return root_; }
  void write(const std::filesystem::path& relative, std::string_view content);
  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

// Figure emitters. Each returns SVG text; callers write the CSV twin.
std::string svg_metric_bars(const std::string& title, std::span<const std::string> scopes,
                            std::span<const double> accuracy, std::span<const double> f1);
std::string svg_confusion(const std::string& title, const Confusion& cm);
std::string svg_importance(const std::string& title, std::span<const std::string> names,
                           std::span<const double> values);

void cmd_segment(const ExperimentConfig& cfg, OutputWriter& out);
void cmd_extract(const ExperimentConfig& cfg, OutputWriter& out);
/// Writes the synthetic corpus, then segments and extracts it from disk.
void cmd_synth(const ExperimentConfig& cfg, OutputWriter& out);
void cmd_eval(const ExperimentConfig& cfg, OutputWriter& out);
void cmd_importance(const ExperimentConfig& cfg, OutputWriter& out);
void cmd_summary(const ExperimentConfig& cfg, OutputWriter& out);
void cmd_all(const ExperimentConfig& cfg, OutputWriter& out);

/// Runs one verb and writes run_meta.json. Throws prosody::Error.
void run_command(const std::string& verb, const ExperimentConfig& cfg);

/// Loads the table named by the config, or <out>/features/table.csv.
FeatureTable resolve_table(const ExperimentConfig& cfg);

}  // namespace prosody

#endif  // PROSODY_CLI_REPORT_HPP
