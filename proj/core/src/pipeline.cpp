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

#include "ctxpref/pipeline.hpp"

#include <fmt/format.h>

#include "ctxpref/dataset.hpp"
#include "ctxpref/rng.hpp"

namespace ctxpref::pipeline {
namespace {

enum Stage : std::uint64_t { kWorld, kSample, kEval, kBound };

FitSummary summarize(const fit::FitResult& result) {
  return {result.estimator.values.size(), result.iterations, result.gradient_norm};
}

nlohmann::ordered_json fit_json(const FitSummary& fit) {
  return {{"cells", fit.cells}, {"iterations", fit.iterations},
          {"gradient_norm", fit.gradient_norm}};
}

}  // namespace

EndToEndReport end_to_end(const EndToEndOptions& options, std::uint64_t seed) {
  const World world = simulate::reversal_world(options.world, derive_seed(seed, kWorld));
  const auto train =
      simulate::sample_preferences(world, options.train_preferences, derive_seed(seed, kSample));
  const auto pairs = simulate::reversal_pairs(world);
  const auto test = dataset::expand_pairs(pairs);

  auto fit_options = options.fit;
  fit_options.context_aware = true;
  const auto ctx_fit = simulate::fit_records(world, train, fit_options, options.posterior_smoothing);
  fit_options.context_aware = false;
  const auto nc_fit = simulate::fit_records(world, train, fit_options, options.posterior_smoothing);

  eval::EvalOptions eval_options;
  eval_options.workers = options.workers;
  const auto eval_seed = derive_seed(seed, kEval);

  EndToEndReport report;
  report.seed = seed;
  report.intents = world.num_intents();
  report.prompts = world.num_prompts();
  report.contexts = world.num_contexts();
  report.completions = world.num_completions();
  report.train_records = train.size();
  report.test_pairs = pairs.size();
  report.ctx_fit = summarize(ctx_fit);
  report.nc_fit = summarize(nc_fit);
  report.ctx = eval::run_protocol(eval::EstimatorScorer(ctx_fit.estimator), test,
                                  eval::Protocol::kCtx, eval_seed, eval_options);
  report.nc = eval::run_protocol(eval::EstimatorScorer(nc_fit.estimator), test,
                                 eval::Protocol::kNc, eval_seed, eval_options);
  const auto bound_seed = derive_seed(seed, kBound);
  report.ctx_bound =
      bound::verify_bounds_monte_carlo(world, ctx_fit.estimator, options.bound_queries, bound_seed,
                                       options.workers, options.histogram_bins);
  report.nc_bound =
      bound::verify_bounds_monte_carlo(world, nc_fit.estimator, options.bound_queries, bound_seed,
                                       options.workers, options.histogram_bins);
  return report;
}

nlohmann::ordered_json summary_to_json(const bound::MonteCarloSummary& summary) {
  nlohmann::ordered_json out{{"queries", summary.queries},
                             {"violations", summary.violations},
                             {"min_slack", summary.min_slack},
                             {"max_slack", summary.max_slack},
                             {"max_lhs", summary.max_lhs},
                             {"histogram", summary.histogram}};
  if (summary.first_violation_index) {
    const auto& v = *summary.first_violation;
    out["first_violation"] = {{"index", *summary.first_violation_index},
                              {"lhs", v.lhs},
                              {"prediction_term", v.prediction_term},
                              {"inference_term", v.inference_term},
                              {"rhs", v.rhs}};
  }
  return out;
}

nlohmann::ordered_json report_to_json(const EndToEndReport& report) {
  return {
      {"seed", report.seed},
      {"world",
       {{"intents", report.intents},
        {"prompts", report.prompts},
        {"contexts", report.contexts},
        {"completions", report.completions}}},
      {"train_records", report.train_records},
      {"test_pairs", report.test_pairs},
      {"fits", {{"ctx", fit_json(report.ctx_fit)}, {"nc", fit_json(report.nc_fit)}}},
      {"agreement", {{"ctx", eval::report_to_json(report.ctx)}, {"nc", eval::report_to_json(report.nc)}}},
      {"bound", {{"ctx", summary_to_json(report.ctx_bound)},
                 {"nc", summary_to_json(report.nc_bound)}}},
  };
}

std::string format_report(const EndToEndReport& report) {
  std::string out;
  out += fmt::format("world: {} intents, {} prompts, {} contexts, {} completions (seed {})\n",
                     report.intents, report.prompts, report.contexts, report.completions,
                     report.seed);
  out += fmt::format("train preferences: {}   test pairs: {} ({} records)\n\n",
                     report.train_records, report.test_pairs, report.ctx.n);
  out += fmt::format("{:<8} {:>10} {:>18} {:>8} {:>11} {:>11}\n", "fit", "agreement",
                     "95% interval", "ties", "violations", "max slack");
  auto row = [&](std::string_view name, const eval::AgreementReport& r,
                 const bound::MonteCarloSummary& b) {
    out += fmt::format("{:<8} {:>10.3f}     ({:.3f}, {:.3f}) {:>8} {:>11} {:>11.4f}\n", name,
                       r.agreement, r.ci_low, r.ci_high, r.ties_randomized, b.violations,
                       b.max_slack);
  };
  row("ctx", report.ctx, report.ctx_bound);
  row("nc", report.nc, report.nc_bound);
  return out;
}

}  // namespace ctxpref::pipeline
