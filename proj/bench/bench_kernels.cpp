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

// Serial reference vs OpenMP kernels: forest and boosted fitting, batch
// feature extraction and resampling.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "prosody/audio_io.hpp"
#include "prosody/features.hpp"
#include "prosody/rng.hpp"
#include "prosody/synth.hpp"
#include "prosody/trees.hpp"

namespace {

using namespace prosody;

struct Task {
  std::vector<double> x;
  std::vector<int> y;
  std::size_t rows, cols;
};

const Task& task() {
  static const Task t = [] {
    Task t{{}, {}, 2000, 88};
    Rng rng(1);
    for (std::size_t i = 0; i < t.rows; ++i) {
      const int label = rng.uniform() < 0.5;
      t.y.push_back(label);
      for (std::size_t c = 0; c < t.cols; ++c) t.x.push_back(rng.normal() + (c < 4 && label ? 0.8 : 0.0));
    }
    return t;
  }();
  return t;
}

void BM_Forest(benchmark::State& state) {
  const Task& t = task();
  ForestConfig cfg;
  cfg.n_trees = 64;
  cfg.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(MatrixView(t.x, t.rows, t.cols), t.y, cfg));
}
BENCHMARK(BM_Forest)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

void BM_Boosted(benchmark::State& state) {
  const Task& t = task();
  BoostConfig cfg;
  cfg.n_rounds = 40;
  cfg.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_boosted(MatrixView(t.x, t.rows, t.cols), t.y, cfg));
}
BENCHMARK(BM_Boosted)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

void BM_ExtractBatch(benchmark::State& state) {
  static const AudioClip clip = synthesize_vowel(180.0, "a", 8.0);
  std::vector<ExtractionJob> jobs;
  for (int k = 0; k < 32; ++k) jobs.push_back({&clip, Ipu{0.2 * k, 0.2 * k + 1.5, "v", k}});
  for (auto _ : state) {
    if (state.range(0)) {
      benchmark::DoNotOptimize(extract_batch(jobs));
    } else {
      benchmark::DoNotOptimize(extract_batch_serial(jobs));
    }
  }
}
BENCHMARK(BM_ExtractBatch)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

void BM_Resample(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> x(44100 * 10);
  for (double& v : x) v = 0.1 * rng.normal();
  const AudioClip clip(std::move(x), 44100);
  // The resampler has no separate serial path; one thread is the reference.
  const int saved = omp_get_max_threads();
  omp_set_num_threads(state.range(0) ? saved : 1);
  for (auto _ : state) benchmark::DoNotOptimize(resample(clip, 16000));
  omp_set_num_threads(saved);
}
BENCHMARK(BM_Resample)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
