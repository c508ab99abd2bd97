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

#include "prosody/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

#include "prosody/dsp.hpp"
#include "prosody/error.hpp"
#include "prosody/stats.hpp"

namespace prosody {

namespace {

constexpr double kRmsEpsilon = 1e-10;
constexpr double kPowerFloor = 1e-30;
constexpr double kMinFrameEnergy = 1e-12;  // per-sample mean square; rms 1e-6
constexpr double kOctaveCost = 0.01;  // per octave of lag, favouring short periods
constexpr double kHnrFloorDb = -20.0;
constexpr double kHnrCapDb = 40.0;
constexpr double kMaxFormantBandwidthHz = 700.0;
constexpr double kMinFormantHz = 90.0;

const std::array<const char*, kNumLlds> kLldNames = {
    "f0_semitone",          "loudness_db",          "jitter_local",
    "shimmer_local_db",     "hnr_db",               "alpha_ratio",
    "hammarberg_index",     "spectral_slope_0_500", "spectral_slope_500_1500",
    "spectral_centroid_hz", "spectral_flux",        "f1_freq_hz",
    "f1_bandwidth_hz",      "f2_freq_hz",           "f2_bandwidth_hz",
    "f3_freq_hz"};

const std::array<const char*, kNumFunctionals> kFunctionalNames = {"mean", "cv", "p20", "p50",
                                                                    "p80"};

const std::array<const char*, kNumTemporal> kTemporalNames = {
    "ipu_duration_s",
    "voiced_frame_ratio",
    "voiced_segments_per_second",
    "mean_voiced_segment_len_s",
    "stddev_voiced_segment_len_s",
    "mean_unvoiced_segment_len_s",
    "stddev_unvoiced_segment_len_s",
    "loudness_peaks_per_second"};

struct PitchEstimate {
  bool voiced = false;
  double f0_hz = 0.0;
  double period = 0.0;  // samples, fractional
  double clarity = 0.0;
};

struct PeriodStats {
  bool jitter_defined = false;
  bool shimmer_defined = false;
  double jitter = 0.0;
  double shimmer_db = 0.0;
};

struct FrameGeometry {
  std::size_t hop = 0;
  std::size_t pitch_window = 0;
  std::size_t spectral_window = 0;
  std::size_t count = 0;
};

std::vector<double> remove_mean(std::span<const double> x) {
  const double m = stats::mean(x);
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [m](double v) { return v - m; });
  return out;
}

PitchEstimate estimate_pitch(std::span<const double> frame, int sample_rate, const ExtractorConfig& cfg) {
  PitchEstimate est;
  const auto p = remove_mean(frame);
  const std::size_t w = p.size();
  std::vector<double> cumsq(w + 1, 0.0);
  for (std::size_t i = 0; i < w; ++i) cumsq[i + 1] = cumsq[i] + p[i] * p[i];
  if (cumsq[w] <= kMinFrameEnergy * static_cast<double>(w)) return est;

  const auto lag_min = static_cast<std::size_t>(std::floor(sample_rate / cfg.f0_max_hz));
  const auto lag_max = static_cast<std::size_t>(std::ceil(sample_rate / cfg.f0_min_hz));
  if (lag_min < 2 || lag_max + 2 >= w) return est;

  const auto ac = dsp::autocorrelation(p, lag_max + 1);
  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
    const double e0 = cumsq[w - lag];
    const double e1 = cumsq[w] - cumsq[lag];
    r[lag] = (e0 > 0.0 && e1 > 0.0) ? ac[lag] / std::sqrt(e0 * e1) : 0.0;
  }

  double best = -1.0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) best = std::max(best, r[lag]);
  }
  if (best < cfg.voicing_threshold) return est;

  // Peaks compete on interpolated height minus a small per-octave cost on
  // the lag. Period multiples score about as high as the period itself and
  // lose on the cost. A strong second harmonic (F1 near 2*F0) makes the
  // half-period peak nearly as tall, so a relative-height cut is not enough.
  double best_score = -1e300;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    if (!(r[lag] > r[lag - 1] && r[lag] >= r[lag + 1])) continue;
    const double d = dsp::parabolic_offset(r[lag - 1], r[lag], r[lag + 1]);
    const double height = std::min(1.0, dsp::parabolic_peak(r[lag - 1], r[lag], r[lag + 1], d));
    const double period = static_cast<double>(lag) + d;
    const double score = height - kOctaveCost * std::log2(period * cfg.f0_min_hz / sample_rate);
    if (score > best_score) {
      best_score = score;
      est.period = period;
      est.clarity = height;
    }
  }
  est.f0_hz = sample_rate / est.period;
  est.voiced = true;
  return est;
}

// Cycle-by-cycle analysis: each period is the lag that best aligns one cycle
// with the next (normalized cross-correlation, parabolic refinement); cycle
// amplitude is its interpolated positive peak.
PeriodStats analyse_periods(std::span<const double> frame, double period) {
  PeriodStats out;
  const auto p = remove_mean(frame);
  const auto w = static_cast<std::ptrdiff_t>(p.size());
  const auto cycle = static_cast<std::ptrdiff_t>(std::lround(period));
  if (cycle < 4 || 2 * cycle > w) return out;

  auto peak_in = [&](std::ptrdiff_t from, std::ptrdiff_t len) {
    std::ptrdiff_t arg = from;
    for (std::ptrdiff_t i = from; i < from + len; ++i) {
      if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(arg)]) arg = i;
    }
    double value = p[static_cast<std::size_t>(arg)];
    if (arg > 0 && arg + 1 < w) {
      const double l = p[static_cast<std::size_t>(arg - 1)];
      const double r = p[static_cast<std::size_t>(arg + 1)];
      value = dsp::parabolic_peak(l, value, r, dsp::parabolic_offset(l, value, r));
    }
    return std::pair{arg, value};
  };

  std::vector<double> periods;
  std::vector<double> amplitudes;
  std::ptrdiff_t pos = peak_in(0, cycle).first;
  // Start each template a quarter cycle before the peak so peaks sit inside it.
  pos = std::max<std::ptrdiff_t>(0, pos - cycle / 4);
  const auto lag_lo = static_cast<std::ptrdiff_t>(std::floor(0.8 * period));
  const auto lag_hi = static_cast<std::ptrdiff_t>(std::ceil(1.2 * period));

  while (pos + cycle <= w) {
    amplitudes.push_back(peak_in(pos, cycle).second);
    double t_energy = 0.0;
    for (std::ptrdiff_t k = 0; k < cycle; ++k) {
      t_energy += p[static_cast<std::size_t>(pos + k)] * p[static_cast<std::size_t>(pos + k)];
    }
    if (pos + lag_hi + 1 + cycle > w || t_energy <= 0.0) break;
    std::vector<double> c(static_cast<std::size_t>(lag_hi - lag_lo + 3), -2.0);
    for (std::ptrdiff_t lag = lag_lo - 1; lag <= lag_hi + 1; ++lag) {
      double xy = 0.0;
      double yy = 0.0;
      for (std::ptrdiff_t k = 0; k < cycle; ++k) {
        const double a = p[static_cast<std::size_t>(pos + k)];
        const double b = p[static_cast<std::size_t>(pos + lag + k)];
        xy += a * b;
        yy += b * b;
      }
      c[static_cast<std::size_t>(lag - lag_lo + 1)] = yy > 0.0 ? xy / std::sqrt(t_energy * yy) : -2.0;
    }
    std::ptrdiff_t best = lag_lo;
    for (std::ptrdiff_t lag = lag_lo; lag <= lag_hi; ++lag) {
      if (c[static_cast<std::size_t>(lag - lag_lo + 1)] > c[static_cast<std::size_t>(best - lag_lo + 1)]) best = lag;
    }
    const std::size_t bi = static_cast<std::size_t>(best - lag_lo + 1);
    const double d = dsp::parabolic_offset(c[bi - 1], c[bi], c[bi + 1]);
    periods.push_back(static_cast<double>(best) + d);
    pos += best;
  }

  if (periods.size() >= 2) {
    double diff = 0.0;
    for (std::size_t i = 1; i < periods.size(); ++i) diff += std::abs(periods[i] - periods[i - 1]);
    diff /= static_cast<double>(periods.size() - 1);
    out.jitter = diff / stats::mean(periods);
    out.jitter_defined = true;
  }
  if (amplitudes.size() >= 2 &&
      std::all_of(amplitudes.begin(), amplitudes.end(), [](double a) { return a > 0.0; })) {
    double acc = 0.0;
    for (std::size_t i = 1; i < amplitudes.size(); ++i) {
      acc += std::abs(20.0 * std::log10(amplitudes[i] / amplitudes[i - 1]));
    }
    out.shimmer_db = acc / static_cast<double>(amplitudes.size() - 1);
    out.shimmer_defined = true;
  }
  return out;
}

double band_regression_slope(const std::vector<double>& power_db, double bin_hz, double lo_hz,
                             double hi_hz) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < power_db.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f < lo_hz || f > hi_hz) continue;
    sx += f;
    sy += power_db[k];
    sxx += f * f;
    sxy += f * power_db[k];
    ++n;
  }
  const double denom = n * sxx - sx * sx;
  if (n < 2 || denom <= 0.0) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

FrameGeometry frame_geometry(std::size_t n_samples, int sample_rate, const ExtractorConfig& cfg) {
  FrameGeometry g;
  g.hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * sample_rate / 1000.0));
  g.pitch_window = static_cast<std::size_t>(std::lround(cfg.pitch_window_ms * sample_rate / 1000.0));
  g.spectral_window = static_cast<std::size_t>(std::lround(cfg.spectral_window_ms * sample_rate / 1000.0));
  g.count = n_samples >= g.pitch_window ? (n_samples - g.pitch_window) / g.hop + 1 : 0;
  return g;
}

struct FunctionalSet {
  std::array<double, kNumFunctionals> values{};
  bool valid = false;
};

FunctionalSet functionals_of(const LldTrack& track) {
  FunctionalSet out;
  std::vector<double> v;
  v.reserve(track.values.size());
  for (std::size_t i = 0; i < track.values.size(); ++i) {
    if (track.defined[i] && std::isfinite(track.values[i])) v.push_back(track.values[i]);
  }
  if (v.empty()) return out;
  std::sort(v.begin(), v.end());
  const double m = stats::mean(v);
  const double sd = stats::stddev(v);
  out.values[0] = m;
  out.values[1] = std::abs(m) > 1e-12 ? sd / std::abs(m) : 0.0;
  out.values[2] = stats::percentile_sorted(v, 0.2);
  out.values[3] = stats::percentile_sorted(v, 0.5);
  out.values[4] = stats::percentile_sorted(v, 0.8);
  out.valid = true;
  return out;
}

std::vector<double> run_lengths(const std::vector<bool>& mask, bool value) {
  std::vector<double> runs;
  std::size_t i = 0;
  while (i < mask.size()) {
    if (mask[i] != value) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j] == value) ++j;
    runs.push_back(static_cast<double>(j - i));
    i = j;
  }
  return runs;
}

std::size_t count_loudness_peaks(const std::vector<double>& loudness) {
  const auto n = static_cast<std::ptrdiff_t>(loudness.size());
  std::size_t peaks = 0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    bool is_peak = true;
    for (std::ptrdiff_t k = i - 2; k <= i + 2 && is_peak; ++k) {
      if (k == i || k < 0 || k >= n) continue;
      const double other = loudness[static_cast<std::size_t>(k)];
      const double here = loudness[static_cast<std::size_t>(i)];
      is_peak = k < i ? here > other : here >= other;
    }
    if (!is_peak) continue;
    double lo = loudness[static_cast<std::size_t>(i)];
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, i - 5); k <= std::min(n - 1, i + 5); ++k) {
      lo = std::min(lo, loudness[static_cast<std::size_t>(k)]);
    }
    if (loudness[static_cast<std::size_t>(i)] - lo >= 1.0) ++peaks;
  }
  return peaks;
}

LldTrack make_track(Lld id, std::size_t frames, double hop_ms) {
  LldTrack t;
  t.name = kLldNames[static_cast<std::size_t>(id)];
  t.values.assign(frames, 0.0);
  t.defined.assign(frames, false);
  t.hop_ms = hop_ms;
  return t;
}

}  // namespace

std::size_t LldTrack::defined_count() const {
  return static_cast<std::size_t>(std::count(defined.begin(), defined.end(), true));
}

bool FeatureVector::complete() const {
  return std::all_of(lld_valid.begin(), lld_valid.end(), [](bool b) { return b; });
}

double hz_to_semitone(double hz) { return 12.0 * std::log2(hz / 27.5); }

FeatureSchema::FeatureSchema() : version_("prosody88-v1") {
  for (const char* n : kLldNames) lld_names_.emplace_back(n);
  for (const char* n : kFunctionalNames) functional_names_.emplace_back(n);
  for (const char* n : kTemporalNames) temporal_names_.emplace_back(n);
  for (const auto& l : lld_names_) {
    for (const auto& f : functional_names_) names_.push_back(l + "." + f);
  }
  for (const auto& t : temporal_names_) names_.push_back(t);
}

const FeatureSchema& FeatureSchema::standard() {
  static const FeatureSchema schema;
  return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::string FeatureSchema::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = version_;
  j["dimension"] = dimension();
  j["features"] = names_;
  return j.dump(2) + "\n";
}

std::vector<LldTrack> extract_llds(const AudioClip& clip, const Ipu& ipu, const ExtractorConfig& cfg) {
  const double duration = clip.duration_seconds();
  const double half_sample = 0.5 / clip.sample_rate();
  if (ipu.start_s < -half_sample || ipu.end_s > duration + half_sample || ipu.end_s <= ipu.start_s) {
    fail(ErrorKind::IpuOutOfBounds, "IPU [" + std::to_string(ipu.start_s) + ", " +
                                        std::to_string(ipu.end_s) + "] outside clip of " +
                                        std::to_string(duration) + " s");
  }
  if (ipu.duration() < 0.1 - 1e-9) {
    fail(ErrorKind::IpuTooShort, "IPU shorter than 100 ms");
  }

  const int sr = clip.sample_rate();
  const auto s0 = static_cast<std::size_t>(std::max(0L, std::lround(ipu.start_s * sr)));
  const auto s1 = std::min(clip.size(), static_cast<std::size_t>(std::lround(ipu.end_s * sr)));
  const auto x = clip.samples().subspan(s0, s1 - s0);
  const FrameGeometry g = frame_geometry(x.size(), sr, cfg);
  if (g.count == 0) fail(ErrorKind::IpuTooShort, "IPU shorter than the pitch window");

  std::vector<LldTrack> tracks;
  tracks.reserve(kNumLlds);
  for (std::size_t i = 0; i < kNumLlds; ++i) tracks.push_back(make_track(static_cast<Lld>(i), g.count, cfg.hop_ms));
  auto track = [&](Lld id) -> LldTrack& { return tracks[static_cast<std::size_t>(id)]; };
  auto set = [&](Lld id, std::size_t frame, double value) {
    if (!std::isfinite(value)) return;
    track(id).values[frame] = value;
    track(id).defined[frame] = true;
  };

  // Formant analysis runs on a band-limited copy at the formant rate.
  std::vector<double> segment(x.begin(), x.end());
  const AudioClip low = resample(AudioClip(std::move(segment), sr), cfg.formant_rate);
  const auto z = low.samples();
  const double rate_ratio = static_cast<double>(cfg.formant_rate) / sr;
  const auto formant_window =
      static_cast<std::size_t>(std::lround(cfg.spectral_window_ms * cfg.formant_rate / 1000.0));
  const auto formant_taper = dsp::hamming(formant_window);

  const auto taper = dsp::hann(g.spectral_window);
  const std::size_t nfft = dsp::next_pow2(g.spectral_window);
  const double bin_hz = static_cast<double>(sr) / static_cast<double>(nfft);

  std::vector<bool> voiced(g.count, false);
  std::vector<std::vector<double>> magnitudes(g.count);
  std::vector<bool> spectrum_defined(g.count, false);

  for (std::size_t i = 0; i < g.count; ++i) {
    const std::size_t centre = i * g.hop + g.pitch_window / 2;

    // Pitch and voice quality on the long window.
    const auto pitch_frame = x.subspan(centre - g.pitch_window / 2, g.pitch_window);
    const PitchEstimate pitch = estimate_pitch(pitch_frame, sr, cfg);
    voiced[i] = pitch.voiced;
    if (pitch.voiced) {
      set(Lld::F0Semitone, i, hz_to_semitone(pitch.f0_hz));
      const double r = std::min(pitch.clarity, 1.0 - 1e-12);
      const double hnr = r > 0.0 ? 10.0 * std::log10(r / (1.0 - r)) : kHnrFloorDb;
      set(Lld::HnrDb, i, std::clamp(hnr, kHnrFloorDb, kHnrCapDb));
      const PeriodStats ps = analyse_periods(pitch_frame, pitch.period);
      if (ps.jitter_defined) set(Lld::JitterLocal, i, ps.jitter);
      if (ps.shimmer_defined) set(Lld::ShimmerLocalDb, i, ps.shimmer_db);
    }

    // Loudness and spectral shape on the short window.
    const auto spec_frame = x.subspan(centre - g.spectral_window / 2, g.spectral_window);
    double ss = 0.0;
    for (double v : spec_frame) ss += v * v;
    const double rms = std::sqrt(ss / static_cast<double>(spec_frame.size()));
    set(Lld::LoudnessDb, i, 20.0 * std::log10(rms + kRmsEpsilon));

    std::vector<double> windowed(g.spectral_window);
    for (std::size_t k = 0; k < g.spectral_window; ++k) windowed[k] = spec_frame[k] * taper[k];
    const auto power = dsp::power_spectrum(windowed, nfft);
    double total = 0.0;
    for (double pw : power) total += pw;
    if (total > kPowerFloor * static_cast<double>(power.size()) && rms > 0.0) {
      spectrum_defined[i] = true;
      std::vector<double> db(power.size());
      double low_band = 0.0, high_band = 0.0, weighted = 0.0;
      double max_low = -1e300, max_high = -1e300;
      for (std::size_t k = 0; k < power.size(); ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        db[k] = 10.0 * std::log10(power[k] + kPowerFloor);
        if (f >= 50.0 && f < 1000.0) low_band += power[k];
        if (f >= 1000.0 && f <= 5000.0) high_band += power[k];
        if (f <= 2000.0) max_low = std::max(max_low, db[k]);
        if (f > 2000.0 && f <= 5000.0) max_high = std::max(max_high, db[k]);
        weighted += f * power[k];
      }
      if (low_band > 0.0 && high_band > 0.0) set(Lld::AlphaRatio, i, 10.0 * std::log10(high_band / low_band));
      if (max_high > -1e300) set(Lld::HammarbergIndex, i, max_low - max_high);
      set(Lld::SpectralSlope0To500, i, band_regression_slope(db, bin_hz, 0.0, 500.0));
      set(Lld::SpectralSlope500To1500, i, band_regression_slope(db, bin_hz, 500.0, 1500.0));
      set(Lld::SpectralCentroidHz, i, weighted / total);

      auto& mag = magnitudes[i];
      mag.resize(power.size());
      double msum = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) {
        mag[k] = std::sqrt(power[k]);
        msum += mag[k];
      }
      for (double& m : mag) m /= msum;
      if (i > 0 && spectrum_defined[i - 1]) {
        double flux = 0.0;
        for (std::size_t k = 0; k < mag.size(); ++k) {
          const double d = mag[k] - magnitudes[i - 1][k];
          flux += d * d;
        }
        set(Lld::SpectralFlux, i, flux);
      }
    }

    // Formants on voiced frames: pre-emphasis, Hamming, LPC, root solving.
    if (pitch.voiced) {
      const double c_low = static_cast<double>(centre) * rate_ratio;
      const auto start = static_cast<std::ptrdiff_t>(std::lround(c_low - formant_window / 2.0));
      if (start >= 1 && start + static_cast<std::ptrdiff_t>(formant_window) <= static_cast<std::ptrdiff_t>(z.size())) {
        std::vector<double> frame(formant_window);
        for (std::size_t k = 0; k < formant_window; ++k) {
          const auto idx = static_cast<std::size_t>(start) + k;
          frame[k] = (z[idx] - 0.97 * z[idx - 1]) * formant_taper[k];
        }
        const auto coeffs = dsp::lpc(frame, cfg.lpc_order);
        if (!coeffs.empty()) {
          std::vector<std::pair<double, double>> candidates;
          const double fs = cfg.formant_rate;
          for (const auto& root : dsp::lpc_roots(coeffs)) {
            if (root.imag() <= 0.0) continue;
            const double f = std::arg(root) * fs / (2.0 * std::numbers::pi);
            const double bw = -std::log(std::abs(root)) * fs / std::numbers::pi;
            if (f > kMinFormantHz && f < fs / 2.0 - 50.0 && bw > 0.0 && bw < kMaxFormantBandwidthHz) {
              candidates.emplace_back(f, bw);
            }
          }
          std::sort(candidates.begin(), candidates.end());
          if (candidates.size() >= 1) {
            set(Lld::F1FreqHz, i, candidates[0].first);
            set(Lld::F1BandwidthHz, i, candidates[0].second);
          }
          if (candidates.size() >= 2) {
            set(Lld::F2FreqHz, i, candidates[1].first);
            set(Lld::F2BandwidthHz, i, candidates[1].second);
          }
          if (candidates.size() >= 3) set(Lld::F3FreqHz, i, candidates[2].first);
        }
      }
    }
  }

  for (auto& t : tracks) t.voiced_mask = voiced;
  return tracks;
}

FeatureVector apply_functionals(std::span<const LldTrack> tracks, const Ipu& ipu,
                                const FeatureSchema& schema) {
  if (tracks.size() != schema.lld_names().size()) {
    fail(ErrorKind::SchemaMismatch, "expected " + std::to_string(schema.lld_names().size()) +
                                        " LLD tracks, got " + std::to_string(tracks.size()));
  }
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].name != schema.lld_names()[i]) {
      fail(ErrorKind::SchemaMismatch, "track " + std::to_string(i) + " is '" + tracks[i].name +
                                          "', schema expects '" + schema.lld_names()[i] + "'");
    }
    if (tracks[i].values.size() != tracks[i].defined.size()) {
      fail(ErrorKind::SchemaMismatch, "track '" + tracks[i].name + "' has ragged masks");
    }
  }

  FeatureVector fv;
  fv.schema_version = schema.version();
  fv.values.assign(schema.dimension(), 0.0);
  fv.lld_valid.assign(kNumLlds, false);
  for (std::size_t l = 0; l < kNumLlds; ++l) {
    const FunctionalSet fs = functionals_of(tracks[l]);
    fv.lld_valid[l] = fs.valid;
    for (std::size_t f = 0; f < kNumFunctionals; ++f) fv.values[l * kNumFunctionals + f] = fs.values[f];
  }

  const std::vector<bool>& voiced = tracks[0].voiced_mask;
  const double hop_s = tracks[0].hop_ms / 1000.0;
  const double duration = ipu.duration();
  const auto voiced_runs = run_lengths(voiced, true);
  const auto unvoiced_runs = run_lengths(voiced, false);
  auto seconds = [hop_s](std::vector<double> runs) {
    for (double& r : runs) r *= hop_s;
    return runs;
  };
  const auto v_len = seconds(voiced_runs);
  const auto u_len = seconds(unvoiced_runs);
  const double n_frames = static_cast<double>(voiced.size());
  const double voiced_frames = static_cast<double>(std::count(voiced.begin(), voiced.end(), true));

  std::vector<double> loudness = tracks[static_cast<std::size_t>(Lld::LoudnessDb)].values;

  std::size_t t = kNumLlds * kNumFunctionals;
  fv.values[t++] = duration;
  fv.values[t++] = n_frames > 0 ? voiced_frames / n_frames : 0.0;
  fv.values[t++] = duration > 0 ? static_cast<double>(v_len.size()) / duration : 0.0;
  fv.values[t++] = stats::mean(v_len);
  fv.values[t++] = stats::stddev(v_len);
  fv.values[t++] = stats::mean(u_len);
  fv.values[t++] = stats::stddev(u_len);
  fv.values[t++] = duration > 0 ? static_cast<double>(count_loudness_peaks(loudness)) / duration : 0.0;

  for (std::size_t i = 0; i < fv.values.size(); ++i) {
    if (!std::isfinite(fv.values[i])) {
      fv.values[i] = 0.0;
      if (i < kNumLlds * kNumFunctionals) fv.lld_valid[i / kNumFunctionals] = false;
    }
  }
  return fv;
}

FeatureVector extract_ipu_features(const AudioClip& clip, const Ipu& ipu, const FeatureSchema& schema,
                                   const ExtractorConfig& cfg) {
  const auto tracks = extract_llds(clip, ipu, cfg);
  return apply_functionals(tracks, ipu, schema);
}

std::vector<FeatureVector> extract_batch(std::span<const ExtractionJob> jobs, const FeatureSchema& schema,
                                         const ExtractorConfig& cfg) {
  std::vector<FeatureVector> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] = extract_ipu_features(*job.clip, job.ipu, schema, cfg);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<FeatureVector> extract_batch_serial(std::span<const ExtractionJob> jobs,
                                                const FeatureSchema& schema, const ExtractorConfig& cfg) {
  std::vector<FeatureVector> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(extract_ipu_features(*job.clip, job.ipu, schema, cfg));
  return out;
}

}  // namespace prosody
