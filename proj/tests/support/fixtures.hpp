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

// Shared fixtures for unit and acceptance tests.

#ifndef PROSODY_TEST_FIXTURES_HPP
#define PROSODY_TEST_FIXTURES_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "prosody/corpus.hpp"
#include "prosody/features.hpp"
#include "prosody/rng.hpp"

namespace fixtures {

struct LanguageCounts {
  std::string language;
  int asd_utts, asd_ids, td_utts, td_ids;
  double mean_dur_s;
};

// The three corpora of the summary table: utterance and speaker counts per
// group and the mean IPU duration.
inline std::vector<LanguageCounts> table1_counts() {
  return {{"FINNISH", 1323, 6, 249, 6, 2.11}, {"FRENCH", 884, 6, 659, 3, 1.79}, {"SLOVAK", 2867, 37, 2230, 29, 2.36}};
}

// Records reproducing the counts. Durations alternate mean +- 0.4 s so the
// per-language mean is exact.
inline std::vector<prosody::UtteranceRecord> table1_records() {
  using namespace prosody;
  const auto& schema = FeatureSchema::standard();
  std::vector<UtteranceRecord> out;
  for (const auto& lc : table1_counts()) {
    std::vector<double> durations;
    const int n = lc.asd_utts + lc.td_utts;
    for (int i = 0; i < n; ++i) durations.push_back(lc.mean_dur_s);
    for (int i = 0; i + 1 < n; i += 2) {
      durations[i] += 0.4;
      durations[i + 1] -= 0.4;
    }
    int d = 0;
    for (int g = 0; g < 2; ++g) {
      const int utts = g == 0 ? lc.asd_utts : lc.td_utts;
      const int ids = g == 0 ? lc.asd_ids : lc.td_ids;
      for (int u = 0; u < utts; ++u) {
        const int spk = u % ids;
        char id[64];
        std::snprintf(id, sizeof id, "%s_%c%02d", lc.language.c_str(), g == 0 ? 'A' : 'T', spk + 1);
        char utt[96];
        std::snprintf(utt, sizeof utt, "%s_u%05d", id, u);
        UtteranceRecord r;
        r.utterance_id = utt;
        r.speaker = {id, g == 0 ? Group::ASD : Group::TD, lc.language, Sex::M, 12.0};
        r.duration_s = durations[static_cast<std::size_t>(d++)];
        r.features.schema_version = schema.version();
        r.features.values.assign(schema.dimension(), 0.0);
        r.features.lld_valid.assign(kNumLlds, true);
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

// Random table: n_speakers per group per language, utts each; column
// `signal` (if >= 0) is shifted by `effect` for ASD rows.
inline prosody::FeatureTable random_table(const std::vector<std::string>& languages, int n_speakers, int utts,
                                          std::uint64_t seed, int signal = -1, double effect = 0.0) {
  using namespace prosody;
  const auto& schema = FeatureSchema::standard();
  Rng rng(seed);
  std::vector<UtteranceRecord> recs;
  for (const auto& lang : languages) {
    for (int g = 0; g < 2; ++g) {
      for (int s = 0; s < n_speakers; ++s) {
        char id[32];
        std::snprintf(id, sizeof id, "%c%02d", g == 0 ? 'A' : 'T', s + 1);
        for (int u = 0; u < utts; ++u) {
          UtteranceRecord r;
          r.utterance_id = lang + ":" + id + "_u" + std::to_string(u);
          r.speaker = {id, g == 0 ? Group::ASD : Group::TD, lang, Sex::F, std::nullopt};
          r.duration_s = rng.uniform(0.5, 3.0);
          r.features.schema_version = schema.version();
          r.features.lld_valid.assign(kNumLlds, true);
          for (std::size_t c = 0; c < schema.dimension(); ++c) {
            double v = rng.normal();
            if (static_cast<int>(c) == signal && g == 0) v += effect;
            r.features.values.push_back(v);
          }
          recs.push_back(std::move(r));
        }
      }
    }
  }
  return build_table(recs);
}

}  // namespace fixtures

#endif  // PROSODY_TEST_FIXTURES_HPP
