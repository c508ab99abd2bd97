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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "prosody/cli_report.hpp"
#include "prosody/error.hpp"

using namespace prosody;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

fs::path fresh_dir(const char* name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config parsing and validation") {
  const ExperimentConfig c = parse_config(R"({
    "table": "t.csv", "model": "forest", "seed": 12, "mode": "pooled", "nominal_k": 4,
    "forest": {"n_trees": 40}, "segmenter": {"pause_threshold_ms": 250, "threshold_mode": "fixed"},
    "importance": {"n_repeats": 2, "scopes": ["ALL"]}, "output_dir": "o"})",
                                          "/base");
  CHECK(c.table == fs::path("/base/t.csv"));
  CHECK(c.output_dir == fs::path("/base/o"));
  CHECK(c.model.kind == ModelKind::Forest);
  CHECK(c.model.forest.n_trees == 40);
  CHECK(c.importance.model.forest.n_trees == 40);
  CHECK(c.importance.nominal_k == 4);
  CHECK(c.seed == 12);
  CHECK(c.segmenter.pause_threshold_ms == 250.0);
  CHECK(c.segmenter.threshold.kind == ThresholdMode::Kind::FixedDb);
  CHECK(c.importance_scopes == std::vector<std::string>{"ALL"});

  CHECK(kind_of([] { (void)parse_config(R"({"tabel": "x"})"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_config(R"({"forest": {"trees": 3}})"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_config(R"({"seed": "twelve"})"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_config(R"({"mode": "sideways"})"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_config(R"({"nominal_k": 1})"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_config(R"({"schema_version": "v0"})"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_config(R"({"segmenter": {"hop_ms": 0}})"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)parse_config("not json"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { (void)load_config("/nonexistent/cfg.json"); }) == ErrorKind::MissingInput);

  // The hash input ignores the output directory.
  ExperimentConfig a = c, b = c;
  b.output_dir = "/elsewhere";
  CHECK(config_to_json(a) == config_to_json(b));
  b.seed = 13;
  CHECK(config_to_json(a) != config_to_json(b));
}

TEST_CASE("summary command on the three-corpus table") {
  const auto dir = fresh_dir("prosody_cli_summary");
  save_table(dir / "table.csv", build_table(fixtures::table1_records()));
  ExperimentConfig cfg = parse_config(R"({"table": "table.csv", "output_dir": "out"})", dir);
  run_command("summary", cfg);
  const std::string txt = slurp(dir / "out/summary/summary.txt");
  CHECK(txt.find("8212 / 87") != std::string::npos);
  const std::string meta = slurp(dir / "out/run_meta.json");
  CHECK(meta.find("\"config_hash\": \"fnv1a64:") != std::string::npos);
  CHECK(meta.find("summary/summary.csv") != std::string::npos);
  CHECK(meta.find(dir.string()) == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("loco on one language fails before writing anything") {
  const auto dir = fresh_dir("prosody_cli_loco");
  save_table(dir / "table.csv", fixtures::random_table({"ONLY"}, 3, 3, 1));
  ExperimentConfig cfg = parse_config(R"({"table": "table.csv", "mode": "loco", "output_dir": "out"})", dir);
  CHECK(kind_of([&] { run_command("eval", cfg); }) == ErrorKind::ConfigError);
  CHECK(!fs::exists(dir / "out/eval"));
  CHECK(exit_code_for(ErrorKind::ConfigError) == 2);
  CHECK(exit_code_for(ErrorKind::SchemaMismatch) == 3);
  CHECK(exit_code_for(ErrorKind::Internal) == 4);

  cfg.table = dir / "missing.csv";
  CHECK(kind_of([&] { run_command("eval", cfg); }) == ErrorKind::MissingInput);
  fs::remove_all(dir);
}

TEST_CASE("eval and importance write their artifacts and figure twins") {
  const auto dir = fresh_dir("prosody_cli_eval");
  save_table(dir / "table.csv", fixtures::random_table({"A", "B"}, 3, 4, 2, 0, 3.0));
  ExperimentConfig cfg = parse_config(R"({"table": "table.csv", "mode": "all", "model": "forest",
      "forest": {"n_trees": 15}, "boosted": {"n_rounds": 15}, "importance": {"n_repeats": 1},
      "output_dir": "out"})",
                                      dir);
  run_command("eval", cfg);
  for (const char* f : {"eval/within_A.json", "eval/within_B.csv", "eval/pooled_POOLED.json", "eval/loco_LOCO-A.csv",
                        "eval/loco_summary.csv", "figures/eval_within_metrics.svg", "figures/eval_within_metrics.csv",
                        "figures/eval_loco_cm_LOCO-B.svg", "figures/eval_loco_cm_LOCO-B.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "out" / f));
  }
  run_command("importance", cfg);
  for (const char* f : {"importance/importance_A.csv", "importance/importance_ALL.json",
                        "figures/importance_ALL.svg", "figures/importance_ALL.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "out" / f));
  }
  fs::remove_all(dir);
}

TEST_CASE("figure emitters") {
  const std::vector<std::string> scopes = {"A", "B<"};
  const std::vector<double> acc = {0.8, 0.5}, f1 = {0.75, 0.25};
  const std::string bars = svg_metric_bars("t", scopes, acc, f1);
  CHECK(bars.rfind("<svg", 0) == 0);
  CHECK(bars.find("B&lt;") != std::string::npos);
  CHECK(bars.find("0.75") != std::string::npos);
  const std::string cm = svg_confusion("cm", Confusion{40, 10, 20, 30});
  for (const char* n : {">40<", ">10<", ">20<", ">30<"}) CHECK(cm.find(n) != std::string::npos);
  const std::vector<std::string> names = {"f0_semitone.mean"};
  const std::vector<double> vals = {3.5};
  CHECK(svg_importance("imp", names, vals).find("f0_semitone.mean") != std::string::npos);
}

TEST_CASE("output writer records each path once") {
  const auto dir = fresh_dir("prosody_cli_writer");
  OutputWriter w(dir);
  w.write("a/b.txt", "x");
  w.write("a/b.txt", "y");
  w.write("c.txt", "z");
  CHECK(w.written() == std::vector<std::string>{"a/b.txt", "c.txt"});
  CHECK(slurp(dir / "a/b.txt") == "y");
  fs::remove_all(dir);
}
