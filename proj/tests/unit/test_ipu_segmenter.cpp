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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "prosody/error.hpp"
#include "prosody/ipu_segmenter.hpp"
#include "prosody/rng.hpp"

using namespace prosody;

namespace {

constexpr int kRate = 16000;

// Tone bursts at the given [start, end) seconds over low noise.
AudioClip bursts(const std::vector<Interval>& on, double total_s, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(total_s * kRate));
  for (double& v : x) v = 1e-4 * rng.normal();
  for (const auto& iv : on) {
    const auto a = static_cast<std::size_t>(iv.start_s * kRate);
    const auto b = std::min(x.size(), static_cast<std::size_t>(iv.end_s * kRate));
    for (std::size_t i = a; i < b; ++i) x[i] += 0.3 * std::sin(2.0 * std::numbers::pi * 200.0 * i / kRate);
  }
  return AudioClip(std::move(x), kRate);
}

}  // namespace

TEST_CASE("frame intensity matches a direct RMS computation") {
  const AudioClip c = bursts({{0.1, 0.4}}, 0.5);
  SegmenterConfig cfg;
  const auto db = frame_intensity(c, cfg);
  const std::size_t len = 400, hop = 160;
  CHECK(db.size() == (c.size() - len) / hop + 1);
  for (std::size_t i : {0u, 10u, 20u, 40u}) {
    double ss = 0.0;
    for (std::size_t k = 0; k < len; ++k) ss += c.samples()[i * hop + k] * c.samples()[i * hop + k];
    CHECK(db[i] == doctest::Approx(20.0 * std::log10(std::sqrt(ss / len) + 1e-10)));
  }
}

TEST_CASE("adaptive threshold against a brute-force percentile") {
  std::vector<double> db = {-80, -78, -75, -70, -30, -28, -27, -25, -26, -79};
  SegmenterConfig cfg;
  cfg.threshold = ThresholdMode::adaptive(0.30, 6.0);
  // Oracle: order statistic by counting, with linear interpolation.
  std::vector<double> s = db;
  std::sort(s.begin(), s.end());
  const double pos = 0.30 * (s.size() - 1);
  const double p30 = s[2] + (pos - 2.0) * (s[3] - s[2]);
  CHECK(intensity_threshold(db, cfg) == doctest::Approx(std::min(p30 + 6.0, -25.0 - 6.0)));

  // Mostly speech: the percentile lands in the speech level and the cap
  // takes over.
  std::vector<double> loud = {-20, -21, -20.5, -22, -60};
  CHECK(intensity_threshold(loud, cfg) == doctest::Approx(-26.0));

  cfg.threshold = ThresholdMode::fixed(-33.0);
  CHECK(intensity_threshold(db, cfg) == -33.0);
}

TEST_CASE("median smoothing removes isolated flips") {
  const std::vector<bool> m = {false, true, false, false, true, true, false, true, true};
  const auto s = median_smooth(m, 3);
  const std::vector<bool> want = {false, false, false, false, true, true, true, true, true};
  CHECK(s == want);
  CHECK(median_smooth(m, 1) == m);
}

TEST_CASE("the 200 ms rule merges and splits across gaps") {
  SegmenterConfig cfg;
  for (double gap_ms : {100.0, 150.0, 190.0, 210.0, 250.0, 300.0}) {
    const double g = gap_ms / 1000.0;
    const AudioClip c = bursts({{0.3, 0.9}, {0.9 + g, 1.5 + g}}, 1.8 + g);
    const auto ipus = segment_ipus(c, cfg, "clip");
    CAPTURE(gap_ms);
    REQUIRE(ipus.size() == (gap_ms < 200.0 ? 1u : 2u));
    CHECK(std::abs(ipus.front().start_s - 0.3) <= 0.025);
    CHECK(std::abs(ipus.back().end_s - (1.5 + g)) <= 0.025);
    if (ipus.size() == 2) {
      CHECK(std::abs(ipus[0].end_s - 0.9) <= 0.025);
      CHECK(std::abs(ipus[1].start_s - (0.9 + g)) <= 0.025);
      CHECK(ipus[1].index_in_clip == 1);
    }
    CHECK(ipus.front().source_clip_id == "clip");
  }
}

TEST_CASE("short bursts are dropped and silence yields nothing") {
  SegmenterConfig cfg;
  const AudioClip c = bursts({{0.3, 0.35}, {0.8, 1.4}}, 1.8);
  const auto ipus = segment_ipus(c, cfg);
  REQUIRE(ipus.size() == 1);
  CHECK(std::abs(ipus[0].start_s - 0.8) <= 0.025);

  const AudioClip quiet(std::vector<double>(16000, 0.0), kRate);
  CHECK(segment_ipus(quiet, cfg).empty());
  const AudioClip tiny(std::vector<double>(100, 0.1), kRate);
  CHECK(segment_ipus(tiny, cfg).empty());
  CHECK_THROWS_AS(segment_ipus(AudioClip({}, kRate), cfg), Error);
}

TEST_CASE("IPUs are monotone, separated and within the clip") {
  Rng rng(7);
  SegmenterConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Interval> on;
    double t = 0.2;
    for (int k = 0; k < 5; ++k) {
      const double len = rng.uniform(0.15, 0.8);
      on.push_back({t, t + len});
      t += len + rng.uniform(0.05, 0.6);
    }
    const AudioClip c = bursts(on, t + 0.3, 100 + trial);
    const auto ipus = segment_ipus(c, cfg);
    for (std::size_t i = 0; i < ipus.size(); ++i) {
      CHECK(ipus[i].start_s >= 0.0);
      CHECK(ipus[i].end_s <= c.duration_seconds() + 1e-9);
      CHECK(ipus[i].duration() >= 0.1 - 1e-9);
      if (i > 0) CHECK(ipus[i].start_s - ipus[i - 1].end_s >= 0.2 - 1e-9);
    }
  }
}

TEST_CASE("lowering the pause threshold never reduces the IPU count") {
  const AudioClip c = bursts({{0.2, 0.6}, {0.75, 1.1}, {1.35, 1.9}, {2.0, 2.4}}, 2.8);
  std::size_t prev = 0;
  for (double p : {400.0, 300.0, 200.0, 120.0, 60.0}) {
    SegmenterConfig cfg;
    cfg.pause_threshold_ms = p;
    const auto n = segment_ipus(c, cfg).size();
    CHECK(n >= prev);
    prev = n;
  }
}

TEST_CASE("exclusion intervals drop overlapping IPUs") {
  const std::vector<Ipu> ipus = {{0.0, 1.0, "c", 0}, {1.5, 2.0, "c", 1}, {3.0, 4.0, "c", 2}};
  const std::vector<Interval> mask = {{0.9, 1.2}, {2.0, 3.0}};
  const auto kept = filter_ipus(ipus, mask);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].start_s == 1.5);
  CHECK(kept[1].start_s == 3.0);
  CHECK(filter_ipus(ipus, {}).size() == 3);
}

TEST_CASE("config validation") {
  SegmenterConfig cfg;
  cfg.hop_ms = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.frame_len_ms = 5.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.smoothing_frames = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.threshold.percentile = 1.5;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
  }
}

TEST_CASE("IPU CSV round trip") {
  const std::vector<Ipu> ipus = {{0.25, 1.5, "spk_c01", 0}, {2.0, 3.125, "spk_c01", 1}};
  const std::string csv = ipus_to_csv(ipus);
  CHECK(csv == "clip_id,index,start_s,end_s\nspk_c01,0,0.250,1.500\nspk_c01,1,2.000,3.125\n");
  CHECK(ipus_from_csv(csv) == ipus);
  CHECK_THROWS_AS(ipus_from_csv("bad,header\n"), Error);
  CHECK_THROWS_AS(ipus_from_csv("clip_id,index,start_s,end_s\nx,0,abc,1\n"), Error);
}
