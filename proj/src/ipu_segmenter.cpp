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

#include "prosody/ipu_segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "prosody/error.hpp"
#include "prosody/stats.hpp"

namespace prosody {

namespace {

constexpr double kRmsEpsilon = 1e-10;
// Frames at the epsilon floor are digital silence and never count as speech.
constexpr double kDigitalSilenceDb = -199.0;

struct FrameGrid {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t count = 0;
};

FrameGrid make_grid(const AudioClip& clip, const SegmenterConfig& cfg) {
  FrameGrid g;
  g.frame_len = static_cast<std::size_t>(std::lround(cfg.frame_len_ms * clip.sample_rate() / 1000.0));
  g.hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * clip.sample_rate() / 1000.0));
  if (g.frame_len == 0 || g.hop == 0) fail(ErrorKind::ConfigError, "frame or hop shorter than one sample");
  if (clip.size() < g.frame_len) {
    fail(ErrorKind::ClipTooShort, "clip has " + std::to_string(clip.size()) +
                                      " samples, frame needs " + std::to_string(g.frame_len));
  }
  g.count = (clip.size() - g.frame_len) / g.hop + 1;
  return g;
}

std::vector<double> frame_energy(const AudioClip& clip, const FrameGrid& g) {
  const auto x = clip.samples();
  std::vector<double> energy(g.count);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < g.count; ++i) {
    const double* p = x.data() + i * g.hop;
    double ss = 0.0;
    for (std::size_t k = 0; k < g.frame_len; ++k) ss += p[k] * p[k];
    energy[i] = ss / static_cast<double>(g.frame_len);
  }
  return energy;
}

double energy_to_db(double energy) { return 20.0 * std::log10(std::sqrt(energy) + kRmsEpsilon); }

struct Run {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct Span {
  double start = 0.0;  // samples
  double end = 0.0;
};

// Sub-frame boundary estimate: the energy of a frame straddling a boundary
// is a mix of the speech and background levels in proportion to how much of
// its window is speech.
Span refine_run(const std::vector<double>& energy, const FrameGrid& g, const Run& run,
                std::ptrdiff_t prev_last, std::ptrdiff_t next_first, double background) {
  std::vector<double> inside(energy.begin() + static_cast<std::ptrdiff_t>(run.first),
                             energy.begin() + static_cast<std::ptrdiff_t>(run.last) + 1);
  const double level = stats::median(inside);
  const auto hop = static_cast<double>(g.hop);
  const auto len = static_cast<double>(g.frame_len);

  Span fallback{static_cast<double>(run.first) * hop + (len - hop) / 2.0,
                static_cast<double>(run.last) * hop + (len + hop) / 2.0};
  if (!(level > background)) return fallback;

  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(len / hop));
  const auto n = static_cast<std::ptrdiff_t>(energy.size());
  auto fraction = [&](std::ptrdiff_t j) {
    return (energy[static_cast<std::size_t>(j)] - background) / (level - background);
  };

  Span out = fallback;
  {
    const auto a = static_cast<std::ptrdiff_t>(run.first);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>({0, a - reach, prev_last + reach});
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(a + reach, static_cast<std::ptrdiff_t>(run.last));
    double sum = 0.0;
    int count = 0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double f = fraction(j);
      if (f > 0.1 && f < 0.9) {
        sum += static_cast<double>(j) * hop + len * (1.0 - f);
        ++count;
      }
    }
    if (count > 0) out.start = sum / count;
  }
  {
    const auto b = static_cast<std::ptrdiff_t>(run.last);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(b - reach, static_cast<std::ptrdiff_t>(run.first));
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>({n - 1, b + reach, next_first - reach});
    double sum = 0.0;
    int count = 0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double f = fraction(j);
      if (f > 0.1 && f < 0.9) {
        sum += static_cast<double>(j) * hop + len * f;
        ++count;
      }
    }
    if (count > 0) out.end = sum / count;
  }
  if (out.end <= out.start) return fallback;
  return out;
}

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace

void SegmenterConfig::validate() const {
  if (!(hop_ms > 0.0)) fail(ErrorKind::ConfigError, "hop_ms must be positive");
  if (frame_len_ms < hop_ms) fail(ErrorKind::ConfigError, "frame_len_ms must be >= hop_ms");
  if (pause_threshold_ms < hop_ms) fail(ErrorKind::ConfigError, "pause_threshold_ms must be >= hop_ms");
  if (min_ipu_duration_ms < 0.0) fail(ErrorKind::ConfigError, "min_ipu_duration_ms must be >= 0");
  if (smoothing_frames < 1 || smoothing_frames % 2 == 0) {
    fail(ErrorKind::ConfigError, "smoothing_frames must be a positive odd number");
  }
  if (threshold.kind == ThresholdMode::Kind::AdaptivePercentile &&
      !(threshold.percentile >= 0.0 && threshold.percentile <= 1.0)) {
    fail(ErrorKind::ConfigError, "adaptive percentile must lie in [0, 1]");
  }
}

std::vector<double> frame_intensity(const AudioClip& clip, const SegmenterConfig& cfg) {
  cfg.validate();
  const FrameGrid g = make_grid(clip, cfg);
  auto energy = frame_energy(clip, g);
  std::vector<double> db(energy.size());
  std::transform(energy.begin(), energy.end(), db.begin(), energy_to_db);
  return db;
}

double intensity_threshold(std::span<const double> intensity_db, const SegmenterConfig& cfg) {
  if (cfg.threshold.kind == ThresholdMode::Kind::FixedDb) return cfg.threshold.fixed_db;
  if (intensity_db.empty()) return 0.0;
  std::vector<double> sorted(intensity_db.begin(), intensity_db.end());
  std::sort(sorted.begin(), sorted.end());
  const double floor_estimate = stats::percentile_sorted(sorted, cfg.threshold.percentile);
  // Recordings that are mostly speech push the percentile into the speech
  // level; capping at (max - margin) keeps such frames classified as speech.
  return std::min(floor_estimate + cfg.threshold.margin_db, sorted.back() - cfg.threshold.margin_db);
}

std::vector<bool> median_smooth(const std::vector<bool>& mask, int width) {
  if (width <= 1 || mask.empty()) return mask;
  const int half = width / 2;
  const auto n = static_cast<std::ptrdiff_t>(mask.size());
  std::vector<bool> out(mask.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    int ones = 0;
    for (std::ptrdiff_t k = i - half; k <= i + half; ++k) {
      const std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(k, 0, n - 1);
      ones += mask[static_cast<std::size_t>(idx)] ? 1 : 0;
    }
    out[static_cast<std::size_t>(i)] = ones > half;
  }
  return out;
}

std::vector<Ipu> segment_ipus(const AudioClip& clip, const SegmenterConfig& cfg,
                              const std::string& clip_id) {
  cfg.validate();
  if (clip.empty()) fail(ErrorKind::ClipTooShort, "empty clip");
  if (clip.size() < static_cast<std::size_t>(std::lround(cfg.frame_len_ms * clip.sample_rate() / 1000.0))) {
    return {};
  }
  const FrameGrid g = make_grid(clip, cfg);
  const auto energy = frame_energy(clip, g);
  std::vector<double> db(energy.size());
  std::transform(energy.begin(), energy.end(), db.begin(), energy_to_db);
  const double threshold = intensity_threshold(db, cfg);

  std::vector<bool> mask(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) mask[i] = db[i] > threshold && db[i] > kDigitalSilenceDb;
  mask = median_smooth(mask, cfg.smoothing_frames);

  std::vector<Run> runs;
  for (std::size_t i = 0; i < mask.size();) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < mask.size() && mask[j + 1]) ++j;
    runs.push_back({i, j});
    i = j + 1;
  }
  if (runs.empty()) return {};

  std::vector<double> background_frames;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) background_frames.push_back(energy[i]);
  }
  const double background = background_frames.empty() ? 0.0 : stats::median(background_frames);

  const double sr = clip.sample_rate();
  const double hop_s = cfg.hop_ms / 1000.0;
  const double duration = clip.duration_seconds();
  auto snap = [&](double samples) {
    const double t = std::round(samples / sr / hop_s) * hop_s;
    return std::clamp(t, 0.0, duration);
  };

  std::vector<Interval> spans;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const std::ptrdiff_t prev_last = r == 0 ? -1'000'000 : static_cast<std::ptrdiff_t>(runs[r - 1].last);
    const std::ptrdiff_t next_first =
        r + 1 == runs.size() ? 1'000'000'000 : static_cast<std::ptrdiff_t>(runs[r + 1].first);
    const Span s = refine_run(energy, g, runs[r], prev_last, next_first, background);
    const Interval iv{snap(s.start), snap(s.end)};
    // Short bursts are dropped before merging so that a lower pause
    // threshold can never reduce the IPU count.
    if (iv.end_s - iv.start_s + 1e-9 >= cfg.min_ipu_duration_ms / 1000.0 && iv.end_s > iv.start_s) {
      spans.push_back(iv);
    }
  }

  const double pause_s = cfg.pause_threshold_ms / 1000.0;
  std::vector<Ipu> ipus;
  for (const Interval& iv : spans) {
    if (!ipus.empty() && iv.start_s - ipus.back().end_s < pause_s - 1e-9) {
      ipus.back().end_s = std::max(ipus.back().end_s, iv.end_s);
      continue;
    }
    ipus.push_back(Ipu{iv.start_s, iv.end_s, clip_id, static_cast<int>(ipus.size())});
  }
  return ipus;
}

std::vector<Ipu> filter_ipus(std::span<const Ipu> ipus, std::span<const Interval> overlap_mask) {
  std::vector<Ipu> kept;
  kept.reserve(ipus.size());
  for (const Ipu& ipu : ipus) {
    // Mask is sorted by start: the first interval ending after the IPU start
    // is the only candidate that can begin before the IPU ends.
    auto it = std::lower_bound(overlap_mask.begin(), overlap_mask.end(), ipu.start_s,
                               [](const Interval& iv, double t) { return iv.end_s <= t; });
    bool hit = false;
    for (; it != overlap_mask.end() && it->start_s < ipu.end_s; ++it) {
      if (it->end_s > ipu.start_s) {
        hit = true;
        break;
      }
    }
    if (!hit) kept.push_back(ipu);
  }
  return kept;
}

std::string ipus_to_csv(std::span<const Ipu> ipus) {
  std::string out = "clip_id,index,start_s,end_s\n";
  for (const Ipu& ipu : ipus) {
    out += ipu.source_clip_id + "," + std::to_string(ipu.index_in_clip) + "," +
           format_seconds(ipu.start_s) + "," + format_seconds(ipu.end_s) + "\n";
  }
  return out;
}

std::vector<Ipu> ipus_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Ipu> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1) {
      if (line != "clip_id,index,start_s,end_s") {
        fail(ErrorKind::ParseError, "row 1: unexpected IPU CSV header");
      }
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) {
      fail(ErrorKind::ParseError, "row " + std::to_string(row) + ": expected 4 columns");
    }
    try {
      out.push_back(Ipu{std::stod(cells[2]), std::stod(cells[3]), cells[0], std::stoi(cells[1])});
    } catch (const std::exception&) {
      fail(ErrorKind::ParseError, "row " + std::to_string(row) + ": malformed number");
    }
  }
  return out;
}

void save_ipus(const std::filesystem::path& path, std::span<const Ipu> ipus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << ipus_to_csv(ipus);
}

std::vector<Ipu> load_ipus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ipus_from_csv(buf.str());
}

}  // namespace prosody
