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

#ifndef PROSODY_IPU_SEGMENTER_HPP
#define PROSODY_IPU_SEGMENTER_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prosody/audio_io.hpp"

namespace prosody {

/// One inter-pausal unit: a stretch of speech bounded by pauses.
struct Ipu {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string source_clip_id;
  int index_in_clip = 0;

  double duration() const { return end_s - start_s; }
  bool operator==(const Ipu&) const = default;
};

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct ThresholdMode {
  enum class Kind { FixedDb, AdaptivePercentile };
  Kind kind = Kind::AdaptivePercentile;
  double fixed_db = -40.0;
  double percentile = 0.30;  // in [0, 1]
  double margin_db = 6.0;

  static ThresholdMode fixed(double db) { return {Kind::FixedDb, db, 0.30, 6.0}; }
  static ThresholdMode adaptive(double p, double margin) {
    return {Kind::AdaptivePercentile, -40.0, p, margin};
  }
};

struct SegmenterConfig {
  double frame_len_ms = 25.0;
  double hop_ms = 10.0;
  double pause_threshold_ms = 200.0;
  double min_ipu_duration_ms = 100.0;
  ThresholdMode threshold;
  int smoothing_frames = 3;

  /// Throws ConfigError when the invariants between fields do not hold.
  void validate() const;
};

/// Frame intensity in dB: 20*log10(rms + 1e-10), one value per hop.
std::vector<double> frame_intensity(const AudioClip& clip, const SegmenterConfig& cfg);

/// Decision threshold (dB) the segmenter applies to an intensity track.
double intensity_threshold(std::span<const double> intensity_db, const SegmenterConfig& cfg);

/// Width-w running median of a binary mask with edge replication.
std::vector<bool> median_smooth(const std::vector<bool>& mask, int width);

std::vector<Ipu> segment_ipus(const AudioClip& clip, const SegmenterConfig& cfg,
                              const std::string& clip_id = {});

/// Drop every IPU that intersects an exclusion interval.
std::vector<Ipu> filter_ipus(std::span<const Ipu> ipus, std::span<const Interval> overlap_mask);

/// CSV with header clip_id,index,start_s,end_s and 3-decimal seconds.
std::string ipus_to_csv(std::span<const Ipu> ipus);
std::vector<Ipu> ipus_from_csv(const std::string& text);
void save_ipus(const std::filesystem::path& path, std::span<const Ipu> ipus);
std::vector<Ipu> load_ipus(const std::filesystem::path& path);

}  // namespace prosody

#endif  // PROSODY_IPU_SEGMENTER_HPP
