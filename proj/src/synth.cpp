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

#include "prosody/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>

#include "json.hpp"
#include "prosody/error.hpp"
#include "prosody/rng.hpp"

namespace prosody {

namespace {

constexpr double kLeadSilenceS = 0.3;
constexpr double kMinPauseMs = 260.0;   // stays clear of the 200 ms pause rule
constexpr double kMaxGapMs = 170.0;     // intra-utterance gaps must merge
constexpr double kMinGapMs = 20.0;
constexpr double kNoiseFloorDb = 40.0;  // below speech level
constexpr double kAspiration = 0.03;    // excitation-relative noise
constexpr double kRampS = 0.008;

double st_to_hz(double st) { return 27.5 * std::pow(2.0, st / 12.0); }

// Rosenberg glottal flow over one cycle, phase in [0, 1).
double rosenberg(double phase) {
  constexpr double kOpen = 0.40;
  constexpr double kClose = 0.16;
  if (phase < kOpen) return 0.5 * (1.0 - std::cos(std::numbers::pi * phase / kOpen));
  if (phase < kOpen + kClose) return std::cos(0.5 * std::numbers::pi * (phase - kOpen) / kClose);
  return 0.0;
}

// Klatt-style two-pole resonator, unit gain at DC.
struct Resonator {
  double a = 0.0, b = 0.0, c = 0.0;
  double y1 = 0.0, y2 = 0.0;

  Resonator(double freq, double bw, int rate) {
    const double t = 1.0 / rate;
    c = -std::exp(-2.0 * std::numbers::pi * bw * t);
    b = 2.0 * std::exp(-std::numbers::pi * bw * t) * std::cos(2.0 * std::numbers::pi * freq * t);
    a = 1.0 - b - c;
  }
  double step(double x) {
    const double y = a * x + b * y1 + c * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

void filter_formants(std::vector<double>& x, const FormantPreset& preset, int rate) {
  for (std::size_t k = 0; k < 3; ++k) {
    Resonator r(preset.freq_hz[k], preset.bandwidth_hz[k], rate);
    for (double& v : x) v = r.step(v);
  }
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// One voiced stretch: perturbed pulse train -> formants -> edge ramps.
// f0_at(t) gives the contour in Hz at segment-relative time t.
template <typename F0Fn>
std::vector<double> voiced_segment(std::size_t n, int rate, F0Fn f0_at, double fm, double am,
                                   const FormantPreset& preset, Rng& rng) {
  std::vector<double> flow(n, 0.0);
  double t0 = 0.0;
  const double dur = static_cast<double>(n) / rate;
  while (t0 < dur) {
    const double base_period = 1.0 / f0_at(t0);
    const double period = base_period * std::clamp(1.0 + fm * rng.normal(), 0.5, 1.5);
    const double amp = std::max(0.1, 1.0 + am * rng.normal());
    const auto first = static_cast<std::size_t>(std::ceil(t0 * rate));
    for (std::size_t i = first; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      if (t >= t0 + period) break;
      flow[i] = amp * rosenberg((t - t0) / period);
    }
    t0 += period;
  }
  std::vector<double> x(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = flow[i] - prev;
    prev = flow[i];
  }
  const double e = rms(x);
  for (double& v : x) v += kAspiration * e * rng.normal();
  filter_formants(x, preset, rate);
  const auto ramp = std::min(n / 2, static_cast<std::size_t>(kRampS * rate));
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(ramp));
    x[i] *= g;
    x[n - 1 - i] *= g;
  }
  return x;
}

std::vector<double> synthesize_utterance(const GroupProfile& p, const SpeakerOffsets& off, int rate, Rng& rng) {
  const double dur = std::clamp(rng.normal(p.utterance_mean_s, p.utterance_sd_s), 0.8, 3.2);
  const double level_st = p.f0_base_semitones + off.f0_st + p.f0_utterance_sd * rng.normal();
  const double wobble_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const FormantPreset& preset = formant_preset(p.formant_preset);

  const auto total = static_cast<std::size_t>(dur * rate);
  std::vector<double> out(total, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> voiced;  // [start, end) sample ranges

  double t = 0.0;
  while (t < dur) {
    double syl = rng.uniform(0.15, 0.28);
    if (dur - t - syl < 0.12) syl = dur - t;  // absorb a short tail
    const auto s0 = static_cast<std::size_t>(t * rate);
    const auto s1 = std::min(total, static_cast<std::size_t>((t + syl) * rate));
    if (s1 > s0 + 16) voiced.emplace_back(s0, s1);
    t += syl;
    if (t >= dur) break;
    const double gap = std::clamp(rng.normal(p.syllable_gap_ms, p.syllable_gap_jitter_ms), kMinGapMs, kMaxGapMs);
    t += gap / 1000.0;
    if (dur - t < 0.12) break;
  }

  for (const auto& [s0, s1] : voiced) {
    const double seg_start = static_cast<double>(s0) / rate;
    auto f0_at = [&](double tt) {
      const double u = (seg_start + tt) / dur;
      const double st = level_st + p.f0_range_semitones * (0.5 - u) + 0.3 * std::sin(2.0 * std::numbers::pi * 1.5 * u * dur + wobble_phase);
      return st_to_hz(st);
    };
    const auto seg = voiced_segment(s1 - s0, rate, f0_at, p.fm_depth, p.am_depth, preset, rng);
    std::copy(seg.begin(), seg.end(), out.begin() + static_cast<std::ptrdiff_t>(s0));
  }

  double sum_sq = 0.0;
  std::size_t count = 0;
  for (const auto& [s0, s1] : voiced) {
    for (std::size_t i = s0; i < s1; ++i) sum_sq += out[i] * out[i];
    count += s1 - s0;
  }
  const double current = count ? std::sqrt(sum_sq / static_cast<double>(count)) : 0.0;
  if (current > 0.0) {
    const double gain = std::pow(10.0, (p.intensity_db + off.intensity_db) / 20.0) / current;
    for (double& v : out) v *= gain;
  }
  return out;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::ConfigError, where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) fail(ErrorKind::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

nlohmann::ordered_json profile_json(const GroupProfile& p) {
  return {{"f0_base_semitones", p.f0_base_semitones},
          {"f0_range_semitones", p.f0_range_semitones},
          {"f0_utterance_sd", p.f0_utterance_sd},
          {"pause_mean_ms", p.pause_mean_ms},
          {"pause_jitter_ms", p.pause_jitter_ms},
          {"syllable_gap_ms", p.syllable_gap_ms},
          {"syllable_gap_jitter_ms", p.syllable_gap_jitter_ms},
          {"intensity_db", p.intensity_db},
          {"am_depth", p.am_depth},
          {"fm_depth", p.fm_depth},
          {"formant_preset", p.formant_preset},
          {"utterance_mean_s", p.utterance_mean_s},
          {"utterance_sd_s", p.utterance_sd_s}};
}

GroupProfile profile_from(const nlohmann::json& j, const std::string& where) {
  reject_unknown(j,
                 {"f0_base_semitones", "f0_range_semitones", "f0_utterance_sd", "pause_mean_ms", "pause_jitter_ms",
                  "syllable_gap_ms", "syllable_gap_jitter_ms", "intensity_db", "am_depth", "fm_depth",
                  "formant_preset", "utterance_mean_s", "utterance_sd_s"},
                 where);
  GroupProfile p;
  p.f0_base_semitones = j.value("f0_base_semitones", p.f0_base_semitones);
  p.f0_range_semitones = j.value("f0_range_semitones", p.f0_range_semitones);
  p.f0_utterance_sd = j.value("f0_utterance_sd", p.f0_utterance_sd);
  p.pause_mean_ms = j.value("pause_mean_ms", p.pause_mean_ms);
  p.pause_jitter_ms = j.value("pause_jitter_ms", p.pause_jitter_ms);
  p.syllable_gap_ms = j.value("syllable_gap_ms", p.syllable_gap_ms);
  p.syllable_gap_jitter_ms = j.value("syllable_gap_jitter_ms", p.syllable_gap_jitter_ms);
  p.intensity_db = j.value("intensity_db", p.intensity_db);
  p.am_depth = j.value("am_depth", p.am_depth);
  p.fm_depth = j.value("fm_depth", p.fm_depth);
  p.formant_preset = j.value("formant_preset", p.formant_preset);
  p.utterance_mean_s = j.value("utterance_mean_s", p.utterance_mean_s);
  p.utterance_sd_s = j.value("utterance_sd_s", p.utterance_sd_s);
  return p;
}

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

struct SpeakerJob {
  std::size_t language = 0;
  SpeakerMeta meta;
  const GroupProfile* profile = nullptr;
  int utterances = 0;
  std::uint64_t seed = 0;
  SpeakerOffsets offsets;
};

std::vector<SpeakerJob> plan_speakers(const SynthSpec& spec) {
  std::vector<SpeakerJob> jobs;
  for (std::size_t li = 0; li < spec.languages.size(); ++li) {
    const SynthLanguage& lang = spec.languages[li];
    const std::uint64_t lang_seed = derive_seed(spec.seed, li);
    for (int g = 0; g < 2; ++g) {
      const bool asd = g == 0;
      const int n = asd ? lang.n_asd_speakers : lang.n_td_speakers;
      for (int s = 0; s < n; ++s) {
        SpeakerJob job;
        job.language = li;
        job.meta.speaker_id = lang.name + (asd ? "_A" : "_T") + two_digits(s + 1);
        job.meta.group = asd ? Group::ASD : Group::TD;
        job.meta.language = lang.name;
        job.profile = asd ? &lang.asd : &lang.td;
        job.utterances = asd ? lang.asd_utterances_per_speaker : lang.td_utterances_per_speaker;
        job.seed = derive_seed(lang_seed, static_cast<std::uint64_t>(g * 100000 + s));
        Rng rng(derive_seed(job.seed, 0xA11CE));
        job.meta.sex = rng.uniform() < 0.5 ? Sex::M : Sex::F;
        job.meta.age_years = std::round(rng.uniform(4.0, 12.0) * 10.0) / 10.0;
        job.offsets.f0_st = rng.uniform(-lang.speaker_f0_jitter_st, lang.speaker_f0_jitter_st);
        job.offsets.intensity_db = rng.uniform(-lang.speaker_intensity_jitter_db, lang.speaker_intensity_jitter_db);
        jobs.push_back(job);
      }
    }
  }
  return jobs;
}

std::string clip_name(const std::string& speaker_id, std::size_t clip) { return speaker_id + "_c" + two_digits(static_cast<int>(clip + 1)); }

}  // namespace

const FormantPreset& formant_preset(const std::string& name) {
  static const std::vector<FormantPreset> presets = {
      {"a", {730.0, 1090.0, 2440.0}, {80.0, 90.0, 120.0}},
      {"i", {270.0, 2290.0, 3010.0}, {60.0, 100.0, 120.0}},
      {"u", {300.0, 870.0, 2240.0}, {60.0, 80.0, 120.0}},
      {"neutral", {500.0, 1500.0, 2500.0}, {70.0, 90.0, 120.0}},
  };
  for (const auto& p : presets) {
    if (p.name == name) return p;
  }
  fail(ErrorKind::ProfileOutOfRange, "unknown formant preset '" + name + "'");
}

void GroupProfile::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::ProfileOutOfRange, what);
  };
  const double lo = st_to_hz(f0_base_semitones - 0.5 * f0_range_semitones - 1.5);
  const double hi = st_to_hz(f0_base_semitones + 0.5 * f0_range_semitones + 1.5);
  need(lo >= 100.0 && hi <= 600.0, "F0 contour leaves 100-600 Hz");
  need(f0_range_semitones >= 0.0 && f0_utterance_sd >= 0.0 && f0_utterance_sd <= 2.0, "F0 spread out of range");
  need(pause_mean_ms >= 0.0 && pause_jitter_ms >= 0.0, "pauses must be non-negative");
  need(syllable_gap_ms >= kMinGapMs && syllable_gap_ms <= kMaxGapMs && syllable_gap_jitter_ms >= 0.0,
       "syllable gap must lie in 20-170 ms");
  need(intensity_db <= -6.0 && intensity_db >= -60.0, "intensity must lie in -60..-6 dBFS");
  need(am_depth >= 0.0 && am_depth < 0.5 && fm_depth >= 0.0 && fm_depth < 0.1, "perturbation depth out of range");
  need(utterance_mean_s >= 0.8 && utterance_mean_s <= 3.2 && utterance_sd_s >= 0.0, "utterance length out of range");
  (void)prosody::formant_preset(formant_preset);
}

void SynthSpec::validate() const {
  if (languages.empty()) fail(ErrorKind::ConfigError, "synth spec has no languages");
  if (sample_rate < 11025) fail(ErrorKind::ConfigError, "sample_rate must be at least 11025");
  if (utterances_per_clip < 1) fail(ErrorKind::ConfigError, "utterances_per_clip must be positive");
  std::set<std::string> names;
  for (const auto& l : languages) {
    if (l.name.empty() || !names.insert(l.name).second) fail(ErrorKind::ConfigError, "language names must be unique");
    if (l.n_asd_speakers < 2 || l.n_td_speakers < 2) {
      fail(ErrorKind::ConfigError, "language '" + l.name + "' needs at least 2 speakers per group");
    }
    if (l.asd_utterances_per_speaker < 1 || l.td_utterances_per_speaker < 1) {
      fail(ErrorKind::ConfigError, "language '" + l.name + "' needs at least 1 utterance per speaker");
    }
    l.asd.validate();
    l.td.validate();
  }
}

std::vector<AudioClip> synthesize_speaker(const GroupProfile& profile, std::uint64_t speaker_seed, int n_utterances,
                                          int sample_rate, int utterances_per_clip, SpeakerOffsets offsets) {
  profile.validate();
  if (n_utterances < 0 || utterances_per_clip < 1) fail(ErrorKind::InvalidArgument, "bad utterance counts");
  Rng rng(speaker_seed);
  const double level = profile.intensity_db + offsets.intensity_db;
  const double noise_sd = std::pow(10.0, (level - kNoiseFloorDb) / 20.0);
  const auto lead = static_cast<std::size_t>(kLeadSilenceS * sample_rate);

  std::vector<AudioClip> clips;
  int done = 0;
  while (done < n_utterances) {
    const int in_clip = std::min(utterances_per_clip, n_utterances - done);
    std::vector<double> samples(lead, 0.0);
    for (int u = 0; u < in_clip; ++u) {
      const auto utt = synthesize_utterance(profile, offsets, sample_rate, rng);
      samples.insert(samples.end(), utt.begin(), utt.end());
      const double pause_ms =
          u + 1 < in_clip ? std::max(kMinPauseMs, rng.normal(profile.pause_mean_ms, profile.pause_jitter_ms))
                          : kLeadSilenceS * 1000.0;
      samples.insert(samples.end(), static_cast<std::size_t>(pause_ms / 1000.0 * sample_rate), 0.0);
    }
    for (double& v : samples) v = std::clamp(v + noise_sd * rng.normal(), -1.0, 1.0);
    clips.emplace_back(std::move(samples), sample_rate);
    done += in_clip;
  }
  return clips;
}

AudioClip synthesize_vowel(double f0_hz, const std::string& preset, double duration_s, int sample_rate,
                           double level_db) {
  if (!(f0_hz > 0.0) || !(duration_s > 0.0)) fail(ErrorKind::InvalidArgument, "vowel needs positive f0 and duration");
  Rng rng(0);
  const auto n = static_cast<std::size_t>(duration_s * sample_rate);
  auto x = voiced_segment(n, sample_rate, [&](double) { return f0_hz; }, 0.0, 0.0, formant_preset(preset), rng);
  const double gain = std::pow(10.0, level_db / 20.0) / std::max(rms(x), 1e-12);
  for (double& v : x) v = std::clamp(v * gain, -1.0, 1.0);
  return AudioClip(std::move(x), sample_rate);
}

SynthOutput build_synthetic_table(const SynthSpec& spec, const SegmenterConfig& seg, const ExtractorConfig& ext) {
  spec.validate();
  seg.validate();
  const auto jobs = plan_speakers(spec);
  std::vector<std::vector<UtteranceRecord>> per_speaker(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto& schema = FeatureSchema::standard();

  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ji = 0; ji < n; ++ji) {
    const auto j = static_cast<std::size_t>(ji);
    try {
      const SpeakerJob& job = jobs[j];
      const auto clips = synthesize_speaker(*job.profile, job.seed, job.utterances, spec.sample_rate,
                                            spec.utterances_per_clip, job.offsets);
      for (std::size_t c = 0; c < clips.size(); ++c) {
        const std::string cid = clip_name(job.meta.speaker_id, c);
        for (const Ipu& ipu : segment_ipus(clips[c], seg, cid)) {
          UtteranceRecord rec;
          rec.utterance_id = cid + "_u" + two_digits(ipu.index_in_clip + 1);
          rec.speaker = job.meta;
          rec.duration_s = ipu.duration();
          rec.features = extract_ipu_features(clips[c], ipu, schema, ext);
          per_speaker[j].push_back(std::move(rec));
        }
      }
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<UtteranceRecord> records;
  for (auto& v : per_speaker) std::move(v.begin(), v.end(), std::back_inserter(records));
  return {build_table(records, schema), ground_truth_json(spec)};
}

std::string ground_truth_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["languages"] = nlohmann::ordered_json::array();
  for (const auto& l : spec.languages) {
    j["languages"].push_back({{"name", l.name},
                              {"planted_features", l.planted_features},
                              {"asd_speakers", l.n_asd_speakers},
                              {"td_speakers", l.n_td_speakers},
                              {"asd_utterances", l.n_asd_speakers * l.asd_utterances_per_speaker},
                              {"td_utterances", l.n_td_speakers * l.td_utterances_per_speaker}});
  }
  return j.dump(2) + "\n";
}

SynthCorpus render_synthetic_corpus(const SynthSpec& spec) {
  spec.validate();
  const auto jobs = plan_speakers(spec);
  std::vector<std::vector<AudioClip>> clips(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ji = 0; ji < n; ++ji) {
    const auto j = static_cast<std::size_t>(ji);
    try {
      clips[j] = synthesize_speaker(*jobs[j].profile, jobs[j].seed, jobs[j].utterances, spec.sample_rate,
                                    spec.utterances_per_clip, jobs[j].offsets);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SynthCorpus corpus;
  for (std::size_t li = 0; li < spec.languages.size(); ++li) {
    const auto& lang = spec.languages[li];
    CorpusManifest m;
    m.corpus_name = lang.name;
    m.language = lang.name;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].language != li) continue;
      m.speakers.push_back(jobs[j].meta);
      for (std::size_t c = 0; c < clips[j].size(); ++c) {
        const std::string file = clip_name(jobs[j].meta.speaker_id, c) + ".wav";
        m.clips.push_back({file, jobs[j].meta.speaker_id, "mono", {}});
        corpus.clips.emplace_back(lang.name + "/" + file, std::move(clips[j][c]));
      }
    }
    corpus.manifests.push_back(std::move(m));
  }
  return corpus;
}

std::vector<std::filesystem::path> write_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& dir) {
  const SynthCorpus corpus = render_synthetic_corpus(spec);
  std::vector<std::filesystem::path> manifests;
  for (const auto& m : corpus.manifests) std::filesystem::create_directories(dir / m.corpus_name);
  for (const auto& [rel, clip] : corpus.clips) write_wav(dir / rel, clip, 16);
  for (const auto& m : corpus.manifests) {
    const auto path = dir / m.corpus_name / "manifest.json";
    save_manifest(path, m);
    manifests.push_back(path);
  }
  std::ofstream gt(dir / "ground_truth.json", std::ios::binary);
  if (!gt) fail(ErrorKind::IoError, "cannot write ground truth under " + dir.string());
  gt << ground_truth_json(spec);
  return manifests;
}

SynthSpec default_synth_spec(std::uint64_t seed) {
  GroupProfile td;
  td.f0_base_semitones = 36.0;
  td.syllable_gap_ms = 70.0;
  td.pause_mean_ms = 420.0;
  GroupProfile asd = td;
  asd.f0_base_semitones = 40.0;
  asd.syllable_gap_ms = 140.0;
  asd.pause_mean_ms = 520.0;

  const std::vector<std::string> planted = {"f0_semitone.mean", "f0_semitone.p20", "f0_semitone.p50",
                                            "f0_semitone.p80", "mean_unvoiced_segment_len_s"};
  auto language = [&](const std::string& name, double f0_shift, double level_shift, const std::string& preset) {
    SynthLanguage l;
    l.name = name;
    l.asd = asd;
    l.td = td;
    for (GroupProfile* p : {&l.asd, &l.td}) {
      p->f0_base_semitones += f0_shift;
      p->intensity_db += level_shift;
      p->formant_preset = preset;
    }
    l.planted_features = planted;
    return l;
  };

  SynthSpec spec;
  spec.seed = seed;
  SynthLanguage imbalanced = language("SYN_IMBALANCED", 0.0, 0.0, "a");
  imbalanced.n_asd_speakers = 6;
  imbalanced.n_td_speakers = 6;
  imbalanced.asd_utterances_per_speaker = 17;
  imbalanced.td_utterances_per_speaker = 3;
  SynthLanguage small = language("SYN_SMALL", 0.5, -2.0, "neutral");
  small.n_asd_speakers = 6;
  small.n_td_speakers = 3;
  small.asd_utterances_per_speaker = 10;
  small.td_utterances_per_speaker = 10;
  SynthLanguage large = language("SYN_LARGE", -0.5, 1.0, "a");
  large.n_asd_speakers = 30;
  large.n_td_speakers = 30;
  large.asd_utterances_per_speaker = 6;
  large.td_utterances_per_speaker = 6;
  spec.languages = {imbalanced, small, large};
  return spec;
}

SynthLanguage disjoint_cue_language(const std::string& name) {
  GroupProfile td;
  td.f0_base_semitones = 38.0;  // between the default groups, so the F0 cue says nothing
  td.syllable_gap_ms = 105.0;
  GroupProfile asd = td;
  asd.intensity_db = td.intensity_db + 8.0;
  asd.am_depth = 0.20;
  SynthLanguage l;
  l.name = name;
  l.asd = asd;
  l.td = td;
  l.n_asd_speakers = 8;
  l.n_td_speakers = 8;
  l.asd_utterances_per_speaker = 8;
  l.td_utterances_per_speaker = 8;
  l.planted_features = {"loudness_db.mean", "shimmer_local_db.mean"};
  return l;
}

SynthLanguage null_language(const std::string& name) {
  SynthLanguage l;
  l.name = name;
  l.n_asd_speakers = 8;
  l.n_td_speakers = 8;
  l.asd_utterances_per_speaker = 8;
  l.td_utterances_per_speaker = 8;
  return l;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["sample_rate"] = spec.sample_rate;
  j["utterances_per_clip"] = spec.utterances_per_clip;
  j["languages"] = nlohmann::ordered_json::array();
  for (const auto& l : spec.languages) {
    j["languages"].push_back({{"name", l.name},
                              {"asd_profile", profile_json(l.asd)},
                              {"td_profile", profile_json(l.td)},
                              {"n_asd_speakers", l.n_asd_speakers},
                              {"n_td_speakers", l.n_td_speakers},
                              {"asd_utterances_per_speaker", l.asd_utterances_per_speaker},
                              {"td_utterances_per_speaker", l.td_utterances_per_speaker},
                              {"speaker_f0_jitter_st", l.speaker_f0_jitter_st},
                              {"speaker_intensity_jitter_db", l.speaker_intensity_jitter_db},
                              {"planted_features", l.planted_features}});
  }
  return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
  SynthSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    reject_unknown(j, {"seed", "sample_rate", "utterances_per_clip", "languages", "preset"}, "synth spec");
    if (j.contains("preset")) {
      if (j["preset"].get<std::string>() != "default") fail(ErrorKind::ConfigError, "unknown synth preset");
      spec = default_synth_spec();
    }
    spec.seed = j.value("seed", spec.seed);
    spec.sample_rate = j.value("sample_rate", spec.sample_rate);
    spec.utterances_per_clip = j.value("utterances_per_clip", spec.utterances_per_clip);
    if (j.contains("languages")) {
      spec.languages.clear();
      for (const auto& jl : j["languages"]) {
        reject_unknown(jl,
                       {"name", "asd_profile", "td_profile", "n_asd_speakers", "n_td_speakers",
                        "asd_utterances_per_speaker", "td_utterances_per_speaker", "speaker_f0_jitter_st",
                        "speaker_intensity_jitter_db", "planted_features"},
                       "synth language");
        SynthLanguage l;
        l.name = jl.at("name").get<std::string>();
        if (jl.contains("asd_profile")) l.asd = profile_from(jl["asd_profile"], "asd_profile of " + l.name);
        if (jl.contains("td_profile")) l.td = profile_from(jl["td_profile"], "td_profile of " + l.name);
        l.n_asd_speakers = jl.value("n_asd_speakers", l.n_asd_speakers);
        l.n_td_speakers = jl.value("n_td_speakers", l.n_td_speakers);
        l.asd_utterances_per_speaker = jl.value("asd_utterances_per_speaker", l.asd_utterances_per_speaker);
        l.td_utterances_per_speaker = jl.value("td_utterances_per_speaker", l.td_utterances_per_speaker);
        l.speaker_f0_jitter_st = jl.value("speaker_f0_jitter_st", l.speaker_f0_jitter_st);
        l.speaker_intensity_jitter_db = jl.value("speaker_intensity_jitter_db", l.speaker_intensity_jitter_db);
        l.planted_features = jl.value("planted_features", l.planted_features);
        spec.languages.push_back(std::move(l));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("malformed synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

FeatureTable build_planted_table(const PlantedSpec& spec) {
  const auto& schema = FeatureSchema::standard();
  std::vector<std::size_t> planted;
  for (const auto& name : spec.planted) {
    const auto idx = schema.index_of(name);
    if (!idx) fail(ErrorKind::InvalidArgument, "unknown planted feature '" + name + "'");
    planted.push_back(*idx);
  }
  if (spec.speaker_sd < 0.0 || spec.speaker_sd >= 1.0) fail(ErrorKind::InvalidArgument, "speaker_sd must be in [0, 1)");
  const double within = std::sqrt(1.0 - spec.speaker_sd * spec.speaker_sd);
  const std::size_t dim = schema.dimension();

  std::vector<UtteranceRecord> records;
  for (int g = 0; g < 2; ++g) {
    const bool asd = g == 0;
    const int n_spk = asd ? spec.n_asd_speakers : spec.n_td_speakers;
    for (int s = 0; s < n_spk; ++s) {
      Rng rng(derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(g)), static_cast<std::uint64_t>(s)));
      SpeakerMeta meta;
      meta.speaker_id = std::string(asd ? "A" : "T") + two_digits(s + 1);
      meta.group = asd ? Group::ASD : Group::TD;
      meta.language = spec.language;
      std::vector<double> speaker_effect(dim);
      for (double& v : speaker_effect) v = spec.speaker_sd * rng.normal();
      for (int u = 0; u < spec.utterances_per_speaker; ++u) {
        UtteranceRecord rec;
        rec.utterance_id = meta.speaker_id + "_u" + two_digits(u + 1);
        rec.speaker = meta;
        rec.duration_s = 1.0 + rng.uniform();
        rec.features.schema_version = schema.version();
        rec.features.values.resize(dim);
        rec.features.lld_valid.assign(kNumLlds, true);
        for (std::size_t c = 0; c < dim; ++c) rec.features.values[c] = speaker_effect[c] + within * rng.normal();
        if (asd) {
          for (std::size_t c : planted) rec.features.values[c] += spec.effect_sd;
        }
        records.push_back(std::move(rec));
      }
    }
  }
  return build_table(records, schema);
}

}  // namespace prosody
