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

#ifndef PROSODY_SYNTH_HPP
#define PROSODY_SYNTH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "prosody/audio_io.hpp"
#include "prosody/corpus.hpp"
#include "prosody/features.hpp"
#include "prosody/ipu_segmenter.hpp"

namespace prosody {

struct FormantPreset {
  std::string name;
  std::array<double, 3> freq_hz;
  std::array<double, 3> bandwidth_hz;
};

/// "a", "i", "u" (adult vowel averages) and "neutral".
const FormantPreset& formant_preset(const std::string& name);

/// Acoustic profile of one group in one synthetic language.
struct GroupProfile {
  double f0_base_semitones = 36.0;   // 220 Hz
  double f0_range_semitones = 2.0;   // declination span across an utterance
  double f0_utterance_sd = 0.3;      // per-utterance level offset (semitones)
  double pause_mean_ms = 450.0;      // silence between utterances
  double pause_jitter_ms = 60.0;
  double syllable_gap_ms = 70.0;     // unvoiced gaps inside an utterance
  double syllable_gap_jitter_ms = 15.0;
  double intensity_db = -20.0;       // speech RMS, dBFS
  double am_depth = 0.04;            // per-pulse amplitude sd (shimmer proxy)
  double fm_depth = 0.005;           // per-cycle period sd (jitter proxy)
  std::string formant_preset = "a";
  double utterance_mean_s = 1.8;
  double utterance_sd_s = 0.4;

  /// Throws ProfileOutOfRange when a parameter leaves the synthesizable range.
  void validate() const;
};

struct SynthLanguage {
  std::string name;
  GroupProfile asd;
  GroupProfile td;
  int n_asd_speakers = 5;
  int n_td_speakers = 5;
  int asd_utterances_per_speaker = 20;
  int td_utterances_per_speaker = 20;
  double speaker_f0_jitter_st = 1.0;       // uniform +- per speaker
  double speaker_intensity_jitter_db = 2.0;  // uniform +- per speaker
  std::vector<std::string> planted_features;  // ground truth, for reports
};

struct SynthSpec {
  std::vector<SynthLanguage> languages;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  int utterances_per_clip = 10;

  void validate() const;
};

/// Speaker-level variation drawn once per speaker.
struct SpeakerOffsets {
  double f0_st = 0.0;
  double intensity_db = 0.0;
};

/// Clips of concatenated utterances separated by pauses; n_utterances in
/// total. Deterministic per seed.
std::vector<AudioClip> synthesize_speaker(const GroupProfile& profile, std::uint64_t speaker_seed,
                                          int n_utterances = 20, int sample_rate = 16000,
                                          int utterances_per_clip = 10, SpeakerOffsets offsets = {});

/// Steady vowel: Rosenberg pulse train at f0 through the preset's three
/// resonators, no perturbation.
AudioClip synthesize_vowel(double f0_hz, const std::string& preset, double duration_s, int sample_rate = 16000,
                           double level_db = -20.0);

struct SynthOutput {
  FeatureTable table;
  std::string ground_truth_json;
};

/// Runs audio -> IPU -> features for every speaker in the spec.
SynthOutput build_synthetic_table(const SynthSpec& spec, const SegmenterConfig& seg = {},
                                  const ExtractorConfig& ext = {});

std::string ground_truth_json(const SynthSpec& spec);

/// In-memory corpus: one manifest per language (clip paths relative to
/// "<language>/") and the clips keyed by "<language>/<file>.wav".
struct SynthCorpus {
  std::vector<CorpusManifest> manifests;
  std::vector<std::pair<std::string, AudioClip>> clips;
};

SynthCorpus render_synthetic_corpus(const SynthSpec& spec);

/// Writes WAVs plus one manifest per language under dir; returns the
/// manifest paths in language order.
std::vector<std::filesystem::path> write_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& dir);

/// Three languages shaped like the corpus summary classes: imbalanced
/// (6 vs 6 speakers, 85% ASD utterances), small (6 vs 3), large (30 vs
/// 30). Groups differ in F0 level and intra-utterance gap length.
SynthSpec default_synth_spec(std::uint64_t seed = 0);

/// A language whose groups differ only in intensity and shimmer.
SynthLanguage disjoint_cue_language(const std::string& name = "SYN_CONTROL");

/// A language whose two groups share one profile.
SynthLanguage null_language(const std::string& name = "SYN_NULL");

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

/// Table-level generator: speaker-clustered Gaussian noise in every
/// column, with a mean shift of `effect_sd` within-group standard
/// deviations planted in the named columns only.
struct PlantedSpec {
  std::vector<std::string> planted = {"f0_semitone.mean", "mean_unvoiced_segment_len_s"};
  int n_asd_speakers = 10;
  int n_td_speakers = 10;
  int utterances_per_speaker = 12;
  double effect_sd = 2.0;
  double speaker_sd = 0.3;  // fraction of within-group sd that is speaker-level
  std::uint64_t seed = 0;
  std::string language = "PLANTED";
};

FeatureTable build_planted_table(const PlantedSpec& spec);

}  // namespace prosody

#endif  // PROSODY_SYNTH_HPP
