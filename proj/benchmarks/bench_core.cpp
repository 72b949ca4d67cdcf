// Copyright 2026 The ctxpref Authors.
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

#include <benchmark/benchmark.h>

#include <vector>

#include "ctxpref/aggregate.hpp"
#include "ctxpref/bound.hpp"
#include "ctxpref/eval.hpp"
#include "ctxpref/fit.hpp"
#include "ctxpref/pipeline.hpp"
#include "ctxpref/rng.hpp"
#include "ctxpref/simulate.hpp"

using namespace ctxpref;

namespace {

void BM_PhiloxUniform(benchmark::State& state) {
  Philox rng(1);
  double sink = 0.0;
  for (auto _ : state) sink += uniform01(rng);
  benchmark::DoNotOptimize(sink);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxUniform);

void BM_GeneralBound(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Philox rng(2);
  std::vector<double> p(n, 1.0 / n), q(n), d(n), e(n);
  for (std::size_t z = 0; z < n; ++z) {
    q[z] = p[z];
    d[z] = uniform01(rng) - 0.5;
    e[z] = uniform01(rng) - 0.5;
  }
  for (auto _ : state) benchmark::DoNotOptimize(bound::general_bound(p, q, d, e));
}
BENCHMARK(BM_GeneralBound)->Arg(2)->Arg(8)->Arg(64);

void BM_BoundMonteCarlo(benchmark::State& state) {
  const auto world = simulate::reversal_world({.prompts = 200}, 3);
  const auto estimator = bound::perturbed_estimator(world, 0.5, 0.2, 4);
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bound::verify_bounds_monte_carlo(world, estimator, 10'000, 5, workers));
  }
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_BoundMonteCarlo)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_FitTabular(benchmark::State& state) {
  const auto world = simulate::reversal_world({.prompts = static_cast<std::size_t>(state.range(0))}, 6);
  const auto records = simulate::sample_preferences(world, 25 * world.num_prompts(), 7);
  const auto data = simulate::to_data(records, true);
  for (auto _ : state) benchmark::DoNotOptimize(fit::fit_tabular(data));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_FitTabular)->Arg(20)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_EvaluateRandomScorer(benchmark::State& state) {
  const auto world = simulate::reversal_world({.prompts = 500}, 8);
  const auto records = dataset::expand_pairs(simulate::reversal_pairs(world));
  const eval::RandomScorer scorer(9);
  for (auto _ : state) benchmark::DoNotOptimize(eval::run_protocol(scorer, records, eval::Protocol::kCtx, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_EvaluateRandomScorer)->Unit(benchmark::kMicrosecond);

void BM_FindDivergentInstance(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(aggregate::find_divergent_instance(3, 2, 11, 10'000));
}
BENCHMARK(BM_FindDivergentInstance)->Unit(benchmark::kMicrosecond);

void BM_EndToEndDefault(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::end_to_end({}, 12));
}
BENCHMARK(BM_EndToEndDefault)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
