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

#ifndef PROSODY_FEATURES_HPP
#define PROSODY_FEATURES_HPP

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prosody/audio_io.hpp"
#include "prosody/ipu_segmenter.hpp"

namespace prosody {

inline constexpr std::size_t kNumLlds = 16;
inline constexpr std::size_t kNumFunctionals = 5;
inline constexpr std::size_t kNumTemporal = 8;
inline constexpr std::size_t kFeatureDim = kNumLlds * kNumFunctionals + kNumTemporal;

/// Low-level descriptor identifiers, in schema order.
enum class Lld : std::size_t {
  F0Semitone,
  LoudnessDb,
  JitterLocal,
  ShimmerLocalDb,
  HnrDb,
  AlphaRatio,
  HammarbergIndex,
  SpectralSlope0To500,
  SpectralSlope500To1500,
  SpectralCentroidHz,
  SpectralFlux,
  F1FreqHz,
  F1BandwidthHz,
  F2FreqHz,
  F2BandwidthHz,
  F3FreqHz,
};

/// Per-frame track of one descriptor. `defined` marks frames where the
/// descriptor has a value; `voiced_mask` is the shared voicing decision.
struct LldTrack {
  std::string name;
  std::vector<double> values;
  std::vector<bool> defined;
  std::vector<bool> voiced_mask;
  double hop_ms = 10.0;

  std::size_t defined_count() const;
};

/// Ordered, versioned feature names: 16 LLDs x 5 functionals, then 8
/// temporal features.
class FeatureSchema {
 public:
  static const FeatureSchema& standard();

  const std::string& version() const { return version_; }
  const std::vector<std::string>& lld_names() const { return lld_names_; }
  const std::vector<std::string>& functional_names() const { return functional_names_; }
  const std::vector<std::string>& temporal_names() const { return temporal_names_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t dimension() const { return names_.size(); }

  /// Index of a feature name; nullopt when unknown.
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t lld_functional_index(Lld lld, std::size_t functional) const {
    return static_cast<std::size_t>(lld) * kNumFunctionals + functional;
  }

  /// JSON manifest: {"schema_version": ..., "dimension": ..., "features": [...]}.
  std::string to_json() const;

 private:
  FeatureSchema();
  std::string version_;
  std::vector<std::string> lld_names_;
  std::vector<std::string> functional_names_;
  std::vector<std::string> temporal_names_;
  std::vector<std::string> names_;
};

struct FeatureVector {
  std::string schema_version;
  std::vector<double> values;
  /// One flag per LLD; false when the LLD had no defined frames and its
  /// functionals hold the 0.0 fill value.
  std::vector<bool> lld_valid;

  bool complete() const;
};

struct ExtractorConfig {
  double hop_ms = 10.0;
  double pitch_window_ms = 40.0;
  double spectral_window_ms = 25.0;
  double f0_min_hz = 100.0;
  double f0_max_hz = 600.0;
  double voicing_threshold = 0.45;
  int lpc_order = 12;
  int formant_rate = 10000;
};

std::vector<LldTrack> extract_llds(const AudioClip& clip, const Ipu& ipu,
                                   const ExtractorConfig& cfg = {});

FeatureVector apply_functionals(std::span<const LldTrack> tracks, const Ipu& ipu,
                                const FeatureSchema& schema = FeatureSchema::standard());

FeatureVector extract_ipu_features(const AudioClip& clip, const Ipu& ipu,
                                   const FeatureSchema& schema = FeatureSchema::standard(),
                                   const ExtractorConfig& cfg = {});

struct ExtractionJob {
  const AudioClip* clip = nullptr;
  Ipu ipu;
};

/// Feature vectors for every job, in job order. Runs jobs in parallel.
std::vector<FeatureVector> extract_batch(std::span<const ExtractionJob> jobs,
                                         const FeatureSchema& schema = FeatureSchema::standard(),
                                         const ExtractorConfig& cfg = {});

/// Single-threaded reference for extract_batch.
std::vector<FeatureVector> extract_batch_serial(std::span<const ExtractionJob> jobs,
                                                const FeatureSchema& schema = FeatureSchema::standard(),
                                                const ExtractorConfig& cfg = {});

double hz_to_semitone(double hz);

}  // namespace prosody

#endif  // PROSODY_FEATURES_HPP
