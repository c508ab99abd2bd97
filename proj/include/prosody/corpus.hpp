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

#ifndef PROSODY_CORPUS_HPP
#define PROSODY_CORPUS_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prosody/audio_io.hpp"
#include "prosody/features.hpp"
#include "prosody/ipu_segmenter.hpp"

namespace prosody {

enum class Group { ASD, TD };
enum class Sex { M, F, Unknown };

std::string to_string(Group g);
std::string to_string(Sex s);
Group parse_group(const std::string& text);
Sex parse_sex(const std::string& text);

/// Positive-class encoding used throughout: ASD = 1, TD = 0.
inline int label_of(Group g) { return g == Group::ASD ? 1 : 0; }

struct SpeakerMeta {
  std::string speaker_id;
  Group group = Group::TD;
  std::string language;
  Sex sex = Sex::Unknown;
  std::optional<double> age_years;

  bool operator==(const SpeakerMeta&) const = default;
};

struct UtteranceRecord {
  std::string utterance_id;
  SpeakerMeta speaker;
  FeatureVector features;
  double duration_s = 0.0;
};

struct RowMeta {
  std::string utterance_id;
  SpeakerMeta speaker;
  double duration_s = 0.0;

  bool operator==(const RowMeta&) const = default;
};

/// Immutable experiment table: per-row metadata plus a dense row-major
/// feature matrix. Rows are sorted by (language, speaker_id, utterance_id).
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::string schema_version, std::vector<std::string> feature_names,
               std::vector<RowMeta> rows, std::vector<double> values);

  const std::string& schema_version() const { return schema_version_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::size_t rows() const { return meta_.size(); }
  std::size_t dim() const { return feature_names_.size(); }
  bool empty() const { return meta_.empty(); }

  const RowMeta& meta(std::size_t row) const { return meta_[row]; }
  const std::vector<RowMeta>& metas() const { return meta_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * dim(), dim());
  }
  std::span<const double> values() const { return values_; }
  double at(std::size_t r, std::size_t c) const { return values_[r * dim() + c]; }

  std::vector<int> labels() const;
  std::vector<std::string> languages() const;           // sorted, unique
  std::vector<SpeakerMeta> speakers() const;            // unique by (language, id)

  /// Rows at the given indices, in the given order.
  FeatureTable subset(std::span<const std::size_t> indices) const;
  FeatureTable filter_language(const std::string& language) const;

  bool operator==(const FeatureTable&) const = default;

 private:
  std::string schema_version_;
  std::vector<std::string> feature_names_;
  std::vector<RowMeta> meta_;
  std::vector<double> values_;
};

FeatureTable build_table(std::span<const UtteranceRecord> records,
                         const FeatureSchema& schema = FeatureSchema::standard());

struct SummaryRow {
  std::string label;
  std::size_t asd_utts = 0;
  std::size_t asd_ids = 0;
  std::size_t td_utts = 0;
  std::size_t td_ids = 0;
  double mean_dur_s = 0.0;
  std::size_t total_utts = 0;
  std::size_t total_ids = 0;
};

/// Per-language rows plus the ALL row. Mean duration is the mean IPU
/// (utterance) duration in seconds.
struct CorpusSummary {
  std::vector<SummaryRow> languages;
  SummaryRow all;
};

CorpusSummary summarize(const FeatureTable& table);
std::string summary_to_text(const CorpusSummary& summary);
std::string summary_to_csv(const CorpusSummary& summary);

std::string table_to_csv(const FeatureTable& table);
FeatureTable table_from_csv(const std::string& text);
void save_table(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable load_table(const std::filesystem::path& path);

/// One recording in a corpus manifest. `channel` is "mono", "downmix", or a
/// stereo channel index "0"/"1".
struct ClipEntry {
  std::string path;
  std::string speaker_id;
  std::string channel = "mono";
  std::vector<Interval> exclude;
};

struct CorpusManifest {
  std::string corpus_name;
  std::string language;
  std::vector<SpeakerMeta> speakers;
  std::vector<ClipEntry> clips;
  std::filesystem::path base_dir;  // clip paths resolve relative to this

  const SpeakerMeta& speaker(const std::string& id) const;
  std::filesystem::path resolve(const ClipEntry& clip) const;
};

ChannelSelector parse_channel(const std::string& text);
std::string clip_id_of(const ClipEntry& clip);

std::string manifest_to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

}  // namespace prosody

#endif  // PROSODY_CORPUS_HPP
