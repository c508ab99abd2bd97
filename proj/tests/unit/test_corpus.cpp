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
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "prosody/corpus.hpp"
#include "prosody/error.hpp"
#include "prosody/rng.hpp"

using namespace prosody;

namespace {

UtteranceRecord rec(const std::string& id, const std::string& spk, Group g, const std::string& lang, double v = 0.0) {
  UtteranceRecord r;
  r.utterance_id = id;
  r.speaker = {spk, g, lang, Sex::M, 10.0};
  r.duration_s = 1.0;
  r.features.schema_version = "prosody88-v1";
  r.features.values.assign(88, v);
  r.features.lld_valid.assign(16, true);
  return r;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("build_table sorts rows and validates records") {
  std::vector<UtteranceRecord> recs = {rec("u3", "s2", Group::TD, "B", 3), rec("u1", "s1", Group::ASD, "A", 1),
                                       rec("u2", "s1", Group::ASD, "A", 2), rec("u0", "s9", Group::TD, "A", 0)};
  const FeatureTable t = build_table(recs);
  REQUIRE(t.rows() == 4);
  CHECK(t.dim() == 88);
  CHECK(t.meta(0).utterance_id == "u1");
  CHECK(t.meta(1).utterance_id == "u2");
  CHECK(t.meta(2).utterance_id == "u0");
  CHECK(t.meta(3).utterance_id == "u3");
  CHECK(t.at(0, 5) == 1.0);
  CHECK(t.labels() == std::vector<int>{1, 1, 0, 0});
  CHECK(t.languages() == std::vector<std::string>{"A", "B"});
  CHECK(t.speakers().size() == 3);

  // Shuffled input gives the same table.
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    auto shuffled = recs;
    rng.shuffle(std::span<UtteranceRecord>(shuffled));
    CHECK(build_table(shuffled) == t);
  }

  auto dup = recs;
  dup.push_back(rec("u1", "s1", Group::ASD, "A"));
  CHECK(kind_of([&] { (void)build_table(dup); }) == ErrorKind::DuplicateUtteranceId);
  auto mixed = recs;
  mixed[0].features.schema_version = "other";
  CHECK(kind_of([&] { (void)build_table(mixed); }) == ErrorKind::SchemaMismatch);
  auto bad_dur = recs;
  bad_dur[1].duration_s = 0.0;
  CHECK_THROWS_AS(build_table(bad_dur), Error);
  auto bad_meta = recs;
  bad_meta[2].speaker.group = Group::TD;
  CHECK_THROWS_AS(build_table(bad_meta), Error);

  const FeatureTable a = t.filter_language("A");
  CHECK(a.rows() == 3);
  const std::vector<std::size_t> idx = {3, 0};
  CHECK(t.subset(idx).meta(0).utterance_id == "u3");
}

TEST_CASE("summary arithmetic on the three-corpus table") {
  const FeatureTable t = build_table(fixtures::table1_records());
  const CorpusSummary s = summarize(t);
  REQUIRE(s.languages.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto want = fixtures::table1_counts()[i];
    const auto& got = s.languages[i];
    CHECK(got.label == want.language);
    CHECK(got.asd_utts == static_cast<std::size_t>(want.asd_utts));
    CHECK(got.asd_ids == static_cast<std::size_t>(want.asd_ids));
    CHECK(got.td_utts == static_cast<std::size_t>(want.td_utts));
    CHECK(got.td_ids == static_cast<std::size_t>(want.td_ids));
    CHECK(got.mean_dur_s == doctest::Approx(want.mean_dur_s));
  }
  // Oracle: column sums and the duration-weighted mean.
  CHECK(s.all.asd_utts == 1323 + 884 + 2867);
  CHECK(s.all.td_utts == 249 + 659 + 2230);
  CHECK(s.all.total_utts == 8212);
  CHECK(s.all.asd_ids == 49);
  CHECK(s.all.td_ids == 38);
  CHECK(s.all.total_ids == 87);
  const double weighted = (1572 * 2.11 + 1543 * 1.79 + 5097 * 2.36) / 8212.0;
  CHECK(s.all.mean_dur_s == doctest::Approx(weighted));
  CHECK(std::abs(s.all.mean_dur_s - 2.20) <= 0.01);

  const std::string text = summary_to_text(s);
  CHECK(text.find("8212 / 87") != std::string::npos);
  CHECK(text.find("5074 / 49") != std::string::npos);
  CHECK(text.find("3138 / 38") != std::string::npos);
  CHECK(summary_to_csv(s).find("ALL") != std::string::npos);

  const CorpusSummary one = summarize(t.filter_language("FRENCH"));
  CHECK(one.all.total_utts == one.languages[0].total_utts);
  CHECK(one.all.total_ids == one.languages[0].total_ids);
  CHECK(one.all.mean_dur_s == doctest::Approx(one.languages[0].mean_dur_s));
  CHECK(kind_of([] { (void)summarize(FeatureTable{}); }) == ErrorKind::EmptyTable);
}

TEST_CASE("table CSV round trip keeps 9 significant digits") {
  const FeatureTable t = fixtures::random_table({"L1", "L2"}, 3, 8, 42);
  const FeatureTable back = table_from_csv(table_to_csv(t));
  REQUIRE(back.rows() == t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    CHECK(back.meta(i).utterance_id == t.meta(i).utterance_id);
    CHECK(back.meta(i).speaker == t.meta(i).speaker);
    CHECK(back.meta(i).duration_s == doctest::Approx(t.meta(i).duration_s).epsilon(1e-8));
  }
  CHECK(back.feature_names() == t.feature_names());
  double worst = 0.0;
  for (std::size_t i = 0; i < t.values().size(); ++i) {
    const double a = t.values()[i], b = back.values()[i];
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
  }
  CHECK(worst < 1e-8);

  const auto path = std::filesystem::temp_directory_path() / "prosody_table_test.csv";
  save_table(path, t);
  CHECK(load_table(path).rows() == t.rows());
  std::filesystem::remove(path);
}

TEST_CASE("CSV parse errors name the row") {
  const FeatureTable t = fixtures::random_table({"L"}, 2, 2, 1);
  std::string csv = table_to_csv(t);
  // Truncate the third data row to a few columns.
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const auto nl = csv.find('\n', pos);
    lines.push_back(csv.substr(pos, nl - pos));
    pos = nl + 1;
  }
  const std::size_t header_lines = lines[0].rfind("#schema", 0) == 0 ? 2 : 1;
  lines[header_lines + 2] = "x,y,ASD";
  std::string broken;
  for (const auto& l : lines) broken += l + "\n";
  try {
    (void)table_from_csv(broken);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("manifest JSON round trip and channel parsing") {
  CorpusManifest m;
  m.corpus_name = "demo";
  m.language = "L";
  m.speakers = {{"s1", Group::ASD, "L", Sex::F, 9.5}, {"s2", Group::TD, "L", Sex::Unknown, std::nullopt}};
  m.clips = {{"audio/s1_a.wav", "s1", "left", {{1.0, 2.0}}}, {"audio/s2_b.wav", "s2", "mono", {}}};
  const CorpusManifest back = manifest_from_json(manifest_to_json(m), "/data");
  CHECK(back.corpus_name == "demo");
  CHECK(back.speakers == m.speakers);
  REQUIRE(back.clips.size() == 2);
  CHECK(back.clips[0].exclude.size() == 1);
  CHECK(back.clips[0].exclude[0].end_s == 2.0);
  CHECK(back.resolve(back.clips[1]) == std::filesystem::path("/data/audio/s2_b.wav"));
  CHECK(clip_id_of(back.clips[0]) == "s1_a");
  CHECK(back.speaker("s2").group == Group::TD);
  CHECK_THROWS_AS(back.speaker("zz"), Error);

  CHECK(parse_channel("mono").mode() == ChannelSelector::Mode::MonoRequired);
  CHECK(parse_channel("downmix").mode() == ChannelSelector::Mode::DownmixAverage);
  CHECK(parse_channel("1").channel() == 1);
  CHECK(parse_channel("left").channel() == 0);
  CHECK(kind_of([] { (void)parse_channel("center"); }) == ErrorKind::ConfigError);

  CHECK(kind_of([] { (void)manifest_from_json("{not json"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)manifest_from_json(R"({"corpus_name":"x"})"); }) == ErrorKind::ConfigError);
  const char* dup = R"({"corpus_name":"x","language":"L","speakers":[{"speaker_id":"a","group":"ASD"},
    {"speaker_id":"a","group":"TD"}],"clips":[]})";
  CHECK(kind_of([&] { (void)manifest_from_json(dup); }) == ErrorKind::ConfigError);
  const char* numeric = R"({"corpus_name":"x","language":"L","speakers":[{"speaker_id":"a","group":"TD"}],
    "clips":[{"path":"a.wav","speaker_id":"a","channel":1}]})";
  CHECK(manifest_from_json(numeric).clips[0].channel == "1");
}

TEST_CASE("group and sex parsing") {
  CHECK(parse_group("ASD") == Group::ASD);
  CHECK(parse_group("TD") == Group::TD);
  CHECK(label_of(Group::ASD) == 1);
  CHECK(parse_sex("F") == Sex::F);
  CHECK_THROWS_AS(parse_group("X"), Error);
}
