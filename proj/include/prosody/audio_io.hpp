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

#ifndef PROSODY_AUDIO_IO_HPP
#define PROSODY_AUDIO_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace prosody {

enum class ChannelOrigin { Mono, LeftOfStereo, RightOfStereo, Downmix };

std::string to_string(ChannelOrigin origin);

/// Single-channel audio normalized to [-1, 1]. Immutable once built.
class AudioClip {
 public:
  AudioClip() = default;
  AudioClip(std::vector<double> samples, int sample_rate, std::string source_path = {},
            ChannelOrigin origin = ChannelOrigin::Mono);

  std::span<const double> samples() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  const std::string& source_path() const { return source_path_; }
  ChannelOrigin channel_origin() const { return origin_; }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

 private:
  std::vector<double> samples_;
  int sample_rate_ = 16000;
  std::string source_path_;
  ChannelOrigin origin_ = ChannelOrigin::Mono;
};

class ChannelSelector {
 public:
  enum class Mode { MonoRequired, TakeChannel, DownmixAverage };

  static ChannelSelector mono_required() { return ChannelSelector(Mode::MonoRequired, 0); }
  static ChannelSelector take_channel(int index) { return ChannelSelector(Mode::TakeChannel, index); }
  static ChannelSelector downmix_average() { return ChannelSelector(Mode::DownmixAverage, 0); }

  Mode mode() const { return mode_; }
  int channel() const { return channel_; }

 private:
  ChannelSelector(Mode mode, int channel) : mode_(mode), channel_(channel) {}
  Mode mode_;
  int channel_;
};

/// Raw interleaved PCM as stored in the file, before channel selection.
struct PcmData {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::vector<std::int32_t> interleaved;

  std::size_t frames() const { return channels ? interleaved.size() / channels : 0; }
};

/// Parse a RIFF/WAVE PCM byte stream (16 or 24 bit, 1 or 2 channels).
PcmData decode_wav(std::span<const std::uint8_t> bytes);

/// Normalize integer PCM to [-1, 1] by dividing by 2^(bits-1).
double normalize_sample(std::int32_t value, int bits_per_sample);

AudioClip select_channel(const PcmData& pcm, const ChannelSelector& selector,
                         std::string source_path = {});

AudioClip load_wav(const std::filesystem::path& path, const ChannelSelector& selector);

/// Encode samples as PCM WAV. Samples outside [-1, 1] are clipped.
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate,
                                     int bits_per_sample = 16);
std::vector<std::uint8_t> encode_wav_interleaved(std::span<const std::int32_t> interleaved,
                                                 int channels, int sample_rate,
                                                 int bits_per_sample);

void write_wav(const std::filesystem::path& path, const AudioClip& clip, int bits_per_sample = 16);

/// Windowed-sinc polyphase resampler (64 taps). Identity when the rate
/// already matches.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace prosody

#endif  // PROSODY_AUDIO_IO_HPP
