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

#include "prosody/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "prosody/error.hpp"

namespace prosody {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;
constexpr int kResampleTaps = 64;
constexpr int kHalfTaps = kResampleTaps / 2;

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Blackman window over |d| <= kHalfTaps.
double blackman(double d) {
  const double u = (d + kHalfTaps) / kResampleTaps;
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * u) +
         0.08 * std::cos(4.0 * std::numbers::pi * u);
}

// Taps for output position with fractional offset `frac` in [0, 1) past the
// base input sample; tap k covers input sample base + k - (kHalfTaps - 1).
void design_phase(double frac, double cutoff, std::span<double> taps) {
  double sum = 0.0;
  for (int k = 0; k < kResampleTaps; ++k) {
    const double d = static_cast<double>(k - (kHalfTaps - 1)) - frac;
    taps[k] = cutoff * sinc(cutoff * d) * blackman(d);
    sum += taps[k];
  }
  if (sum != 0.0) {
    for (double& t : taps) t /= sum;
  }
}

}  // namespace

std::string to_string(ChannelOrigin origin) {
  switch (origin) {
    case ChannelOrigin::Mono: return "mono";
    case ChannelOrigin::LeftOfStereo: return "left_of_stereo";
    case ChannelOrigin::RightOfStereo: return "right_of_stereo";
    case ChannelOrigin::Downmix: return "downmix";
  }
  return "mono";
}

AudioClip::AudioClip(std::vector<double> samples, int sample_rate, std::string source_path,
                     ChannelOrigin origin)
    : samples_(std::move(samples)),
      sample_rate_(sample_rate),
      source_path_(std::move(source_path)),
      origin_(origin) {
  if (sample_rate_ <= 0) fail(ErrorKind::InvalidArgument, "sample_rate must be positive");
  for (double s : samples_) {
    if (!(s >= -1.0 && s <= 1.0)) {
      fail(ErrorKind::InvalidArgument, "audio sample outside [-1, 1]");
    }
  }
}

double normalize_sample(std::int32_t value, int bits_per_sample) {
  const double scale = static_cast<double>(std::int64_t{1} << (bits_per_sample - 1));
  return static_cast<double>(value) / scale;
}

PcmData decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    fail(ErrorKind::CorruptHeader, "missing RIFF/WAVE signature");
  }
  const std::uint64_t riff_size = read_u32(bytes, 4);
  if (riff_size + 8 > bytes.size()) {
    fail(ErrorKind::CorruptHeader, "RIFF size " + std::to_string(riff_size) +
                                       " exceeds file length " + std::to_string(bytes.size()));
  }

  PcmData pcm;
  std::uint16_t block_align = 0;
  bool have_fmt = false;
  bool have_data = false;
  std::span<const std::uint8_t> data;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint64_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      fail(ErrorKind::CorruptHeader, "chunk declares " + std::to_string(chunk_size) +
                                         " bytes but only " +
                                         std::to_string(bytes.size() - body) + " remain");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16) fail(ErrorKind::CorruptHeader, "fmt chunk too short");
      std::uint16_t format = read_u16(bytes, body);
      pcm.channels = read_u16(bytes, body + 2);
      pcm.sample_rate = static_cast<int>(read_u32(bytes, body + 4));
      block_align = read_u16(bytes, body + 12);
      pcm.bits_per_sample = read_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 40) fail(ErrorKind::CorruptHeader, "extensible fmt chunk too short");
        format = read_u16(bytes, body + 24);
      }
      if (format != kFormatPcm) {
        fail(ErrorKind::UnsupportedFormat,
             "only integer PCM is supported (format tag " + std::to_string(format) + ")");
      }
      if (pcm.bits_per_sample != 16 && pcm.bits_per_sample != 24) {
        fail(ErrorKind::UnsupportedFormat,
             "unsupported bit depth " + std::to_string(pcm.bits_per_sample));
      }
      if (pcm.channels != 1 && pcm.channels != 2) {
        fail(ErrorKind::UnsupportedFormat,
             "unsupported channel count " + std::to_string(pcm.channels));
      }
      if (pcm.sample_rate <= 0) fail(ErrorKind::CorruptHeader, "sample rate is zero");
      if (block_align != pcm.channels * pcm.bits_per_sample / 8) {
        fail(ErrorKind::CorruptHeader, "block_align disagrees with channels and bit depth");
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, chunk_size);
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1U);
  }
  if (!have_fmt) fail(ErrorKind::CorruptHeader, "missing fmt chunk");
  if (!have_data) fail(ErrorKind::CorruptHeader, "missing data chunk");
  if (data.size() % block_align != 0) {
    fail(ErrorKind::CorruptHeader, "data length is not a whole number of frames");
  }

  const int bytes_per_sample = pcm.bits_per_sample / 8;
  const std::size_t count = data.size() / bytes_per_sample;
  pcm.interleaved.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = i * bytes_per_sample;
    std::int32_t v;
    if (bytes_per_sample == 2) {
      v = static_cast<std::int16_t>(data[at] | (data[at + 1] << 8));
    } else {
      std::uint32_t u = static_cast<std::uint32_t>(data[at]) |
                        (static_cast<std::uint32_t>(data[at + 1]) << 8) |
                        (static_cast<std::uint32_t>(data[at + 2]) << 16);
      if (u & 0x800000U) u |= 0xFF000000U;
      v = static_cast<std::int32_t>(u);
    }
    pcm.interleaved[i] = v;
  }
  return pcm;
}

AudioClip select_channel(const PcmData& pcm, const ChannelSelector& selector,
                         std::string source_path) {
  const std::size_t frames = pcm.frames();
  std::vector<double> out(frames);
  ChannelOrigin origin = ChannelOrigin::Mono;
  const int bits = pcm.bits_per_sample;

  if (pcm.channels == 1) {
    if (selector.mode() == ChannelSelector::Mode::TakeChannel && selector.channel() != 0) {
      fail(ErrorKind::ChannelMismatch, "channel " + std::to_string(selector.channel()) +
                                           " requested from a mono file");
    }
    for (std::size_t i = 0; i < frames; ++i) out[i] = normalize_sample(pcm.interleaved[i], bits);
    return AudioClip(std::move(out), pcm.sample_rate, std::move(source_path), origin);
  }

  switch (selector.mode()) {
    case ChannelSelector::Mode::MonoRequired:
      fail(ErrorKind::ChannelMismatch, "mono required but file has 2 channels");
    case ChannelSelector::Mode::TakeChannel: {
      const int ch = selector.channel();
      if (ch != 0 && ch != 1) {
        fail(ErrorKind::ChannelMismatch, "channel index must be 0 or 1 for stereo input");
      }
      origin = ch == 0 ? ChannelOrigin::LeftOfStereo : ChannelOrigin::RightOfStereo;
      for (std::size_t i = 0; i < frames; ++i) {
        out[i] = normalize_sample(pcm.interleaved[2 * i + ch], bits);
      }
      break;
    }
    case ChannelSelector::Mode::DownmixAverage:
      origin = ChannelOrigin::Downmix;
      for (std::size_t i = 0; i < frames; ++i) {
        out[i] = 0.5 * (normalize_sample(pcm.interleaved[2 * i], bits) +
                        normalize_sample(pcm.interleaved[2 * i + 1], bits));
      }
      break;
  }
  return AudioClip(std::move(out), pcm.sample_rate, std::move(source_path), origin);
}

AudioClip load_wav(const std::filesystem::path& path, const ChannelSelector& selector) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return select_channel(decode_wav(bytes), selector, path.string());
}

std::vector<std::uint8_t> encode_wav_interleaved(std::span<const std::int32_t> interleaved,
                                                 int channels, int sample_rate,
                                                 int bits_per_sample) {
  if (bits_per_sample != 16 && bits_per_sample != 24) {
    fail(ErrorKind::UnsupportedFormat, "encoder supports 16 or 24 bit PCM");
  }
  const int bytes_per_sample = bits_per_sample / 8;
  const auto data_size = static_cast<std::uint32_t>(interleaved.size() * bytes_per_sample);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size + 1);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size + (data_size & 1U));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate * channels * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(bits_per_sample));
  put_tag(out, "data");
  put_u32(out, data_size);
  for (std::int32_t v : interleaved) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < bytes_per_sample; ++b) {
      out.push_back(static_cast<std::uint8_t>((u >> (8 * b)) & 0xFF));
    }
  }
  if (data_size & 1U) out.push_back(0);
  return out;
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate,
                                     int bits_per_sample) {
  const double scale = static_cast<double>(std::int64_t{1} << (bits_per_sample - 1));
  const double lo = -scale;
  const double hi = scale - 1.0;
  std::vector<std::int32_t> ints(samples.size());
  std::transform(samples.begin(), samples.end(), ints.begin(), [&](double s) {
    return static_cast<std::int32_t>(std::clamp(std::round(s * scale), lo, hi));
  });
  return encode_wav_interleaved(ints, 1, sample_rate, bits_per_sample);
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, int bits_per_sample) {
  const auto bytes = encode_wav(clip.samples(), clip.sample_rate(), bits_per_sample);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) fail(ErrorKind::InvalidArgument, "target_rate must be positive");
  const int rate = clip.sample_rate();
  if (target_rate == rate) return clip;

  const std::int64_t g = std::gcd(static_cast<std::int64_t>(rate), static_cast<std::int64_t>(target_rate));
  const std::int64_t up = target_rate / g;
  const std::int64_t down = rate / g;
  const double cutoff = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));

  const auto in = clip.samples();
  const auto n_in = static_cast<std::int64_t>(in.size());
  const std::int64_t n_out = (n_in * up + down / 2) / down;

  // Polyphase table when the phase count is modest; otherwise design per sample.
  const bool use_table = up <= 4096;
  std::vector<double> table;
  if (use_table) {
    table.resize(static_cast<std::size_t>(up) * kResampleTaps);
    for (std::int64_t p = 0; p < up; ++p) {
      design_phase(static_cast<double>(p) / static_cast<double>(up), cutoff,
                   std::span<double>(table).subspan(static_cast<std::size_t>(p) * kResampleTaps,
                                                    kResampleTaps));
    }
  }

  std::vector<double> out(static_cast<std::size_t>(n_out));
#pragma omp parallel for schedule(static)
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const std::int64_t phase = num % up;
    double local[kResampleTaps];
    const double* taps;
    if (use_table) {
      taps = table.data() + phase * kResampleTaps;
    } else {
      design_phase(static_cast<double>(phase) / static_cast<double>(up), cutoff, local);
      taps = local;
    }
    double acc = 0.0;
    const std::int64_t first = base - (kHalfTaps - 1);
    for (int k = 0; k < kResampleTaps; ++k) {
      const std::int64_t idx = first + k;
      if (idx >= 0 && idx < n_in) acc += taps[k] * in[static_cast<std::size_t>(idx)];
    }
    out[static_cast<std::size_t>(n)] = std::clamp(acc, -1.0, 1.0);
  }
  return AudioClip(std::move(out), target_rate, clip.source_path(), clip.channel_origin());
}

}  // namespace prosody
