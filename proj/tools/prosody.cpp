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

// prosody: command-line front end. Every verb reads one JSON config; flags
// override a few fields. Errors print one line "error: <Kind>: message".

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "prosody/cli_report.hpp"
#include "prosody/error.hpp"
#include "prosody/trees.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Prosody classification toolkit: segment, extract, evaluate and explain."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string mode;
  std::string model;

  const char* verbs[] = {"segment", "extract", "synth", "eval", "importance", "summary", "all"};
  const char* help[] = {"detect inter-pausal units in every manifest clip",
                        "compute the 88-feature table from stored IPUs",
                        "render a synthetic corpus, then segment and extract it",
                        "speaker-disjoint evaluation (within, pooled or loco)",
                        "consensus feature importance per scope",
                        "per-language utterance / speaker summary",
                        "run the full pipeline"};
  for (int i = 0; i < 7; ++i) {
    auto* sub = app.add_subcommand(verbs[i], help[i]);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "root seed (overrides config)");
    sub->add_option("--mode", mode, "evaluation mode")->check(CLI::IsMember({"within", "pooled", "loco", "all"}));
    sub->add_option("--model", model, "model family")->check(CLI::IsMember({"forest", "boosted", "cart"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: ConfigError: %s\n", e.what());
    return 2;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  try {
    prosody::ExperimentConfig cfg = prosody::load_config(config_path);
    if (sub->count("--out")) cfg.output_dir = out_dir;
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--mode")) cfg.mode = mode;
    if (sub->count("--model")) {
      cfg.model.kind = prosody::parse_model_kind(model);
      cfg.importance.model = cfg.model;
    }
    prosody::run_command(verb, cfg);
  } catch (const prosody::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(prosody::to_string(e.kind())).c_str(), e.what());
    return prosody::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Internal: %s\n", e.what());
    return 4;
  }
  return 0;
}
