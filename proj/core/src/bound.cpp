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

#include "ctxpref/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ctxpref/error.hpp"
#include "ctxpref/parallel.hpp"
#include "ctxpref/rng.hpp"

namespace ctxpref::bound {
namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (const double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kInvalidDistribution, fmt::format("{} has an invalid entry", name));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidDistribution, fmt::format("{} sums to {:.17g}", name, sum));
  }
}

void check_finite(std::span<const double> v, const char* name) {
  for (const double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("{} has a non-finite entry", name));
    }
  }
}

BoundReport finish(double lhs, double prediction, double inference) {
  BoundReport report;
  report.lhs = lhs;
  report.prediction_term = prediction;
  report.inference_term = inference;
  report.rhs = prediction + inference;
  report.holds = report.lhs <= report.rhs + kTolerance;
  return report;
}

}  // namespace

BoundReport general_bound(std::span<const double> true_context_dist,
                          std::span<const double> est_context_dist,
                          std::span<const double> true_deltas,
                          std::span<const double> est_deltas) {
  const std::size_t n = true_context_dist.size();
  if (n == 0 || est_context_dist.size() != n || true_deltas.size() != n ||
      est_deltas.size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("bound inputs have lengths {}, {}, {}, {}", n,
                            est_context_dist.size(), true_deltas.size(), est_deltas.size()));
  }
  check_distribution(true_context_dist, "true context distribution");
  check_distribution(est_context_dist, "estimated context distribution");
  check_finite(true_deltas, "true deltas");
  check_finite(est_deltas, "estimated deltas");

  double true_delta = 0.0;
  double est_delta = 0.0;
  double prediction = 0.0;
  double inference = 0.0;
  for (std::size_t z = 0; z < n; ++z) {
    true_delta += true_context_dist[z] * true_deltas[z];
    est_delta += est_context_dist[z] * est_deltas[z];
    prediction += true_context_dist[z] * std::abs(true_deltas[z] - est_deltas[z]);
    inference += std::abs(est_deltas[z]) * std::abs(true_context_dist[z] - est_context_dist[z]);
  }
  return finish(std::abs(true_delta - est_delta), prediction, inference);
}

BoundReport specific_bound(double true_delta_at_c, double est_delta_at_c,
                           double est_delta_at_chat) {
  const double values[] = {true_delta_at_c, est_delta_at_c, est_delta_at_chat};
  check_finite(values, "specific bound input");
  return finish(std::abs(true_delta_at_c - est_delta_at_chat),
                std::abs(true_delta_at_c - est_delta_at_c),
                std::abs(est_delta_at_c - est_delta_at_chat));
}

MonteCarloSummary verify_bounds_monte_carlo(const World& world, const fit::Estimator& estimator,
                                            std::size_t n_queries, std::uint64_t rng_seed,
                                            std::size_t workers, std::size_t histogram_bins) {
  std::vector<PromptId> eligible;
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    if (world.completions_of(PromptId{x}).size() >= 2) eligible.push_back(PromptId{x});
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no prompt has two or more completions");
  }
  // Estimator context columns in world order.
  const std::size_t n_contexts = world.num_contexts();
  std::vector<std::size_t> column(n_contexts);
  for (std::size_t z = 0; z < n_contexts; ++z) {
    const auto it =
        std::find(estimator.contexts.begin(), estimator.contexts.end(), world.context_name({z}));
    if (it == estimator.contexts.end()) {
      throw Error(ErrorCode::kUnresolvedId,
                  fmt::format("estimator lacks context '{}'", world.context_name({z})));
    }
    column[z] = static_cast<std::size_t>(it - estimator.contexts.begin());
  }

  std::vector<BoundReport> reports(n_queries);
  parallel_for(n_queries, workers, [&](std::size_t k) {
    Philox rng(derive_seed(rng_seed, k));
    const PromptId prompt = eligible[uniform_index(rng, eligible.size())];
    const auto options = world.completions_of(prompt);
    const auto a = uniform_index(rng, options.size());
    auto b = uniform_index(rng, options.size() - 1);
    if (b >= a) ++b;
    const CompletionId first = options[std::min(a, b)];
    const CompletionId second = options[std::max(a, b)];

    const auto posterior = intent_posterior(world, prompt);
    const auto p_true = context_posterior(world, prompt);
    const auto& prompt_name = world.prompt_name(prompt);
    const auto row = estimator.context_posterior.find(prompt_name);
    if (row == estimator.context_posterior.end()) {
      throw Error(ErrorCode::kUnresolvedId,
                  fmt::format("estimator has no context posterior for prompt '{}'", prompt_name));
    }
    std::vector<double> p_est(n_contexts), d_true(n_contexts, 0.0), d_est(n_contexts);
    for (std::size_t z = 0; z < n_contexts; ++z) {
      const ContextId context{z};
      p_est[z] = row->second[column[z]];
      if (p_true[z] > 0.0) {
        d_true[z] = delta(contextual_utility(world, prompt, context, first),
                          contextual_utility(world, prompt, context, second));
      }
      const auto& zname = world.context_name(context);
      d_est[z] = delta(estimator.score(prompt_name, zname, world.completion_name(first)),
                       estimator.score(prompt_name, zname, world.completion_name(second)));
    }
    reports[k] = general_bound(p_true, p_est, d_true, d_est);
  });

  MonteCarloSummary summary;
  summary.queries = n_queries;
  summary.max_slack = n_queries ? -std::numeric_limits<double>::infinity() : 0.0;
  summary.min_slack = n_queries ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t k = 0; k < n_queries; ++k) {
    const auto& r = reports[k];
    summary.max_slack = std::max(summary.max_slack, r.slack());
    summary.min_slack = std::min(summary.min_slack, r.slack());
    summary.max_lhs = std::max(summary.max_lhs, r.lhs);
    if (!r.holds) {
      if (summary.violations == 0) {
        summary.first_violation_index = k;
        summary.first_violation = r;
      }
      ++summary.violations;
    }
  }
  summary.histogram.assign(std::max<std::size_t>(histogram_bins, 1), 0);
  const double width = summary.max_slack > 0.0
                           ? summary.max_slack / static_cast<double>(summary.histogram.size())
                           : 0.0;
  for (const auto& r : reports) {
    std::size_t bin = 0;
    if (width > 0.0 && r.slack() > 0.0) {
      bin = std::min(summary.histogram.size() - 1, static_cast<std::size_t>(r.slack() / width));
    }
    ++summary.histogram[bin];
  }
  return summary;
}

fit::Estimator truth_estimator(const World& world) {
  fit::Estimator estimator;
  estimator.kind = fit::EstimatorKind::kTabularContextAware;
  for (std::size_t z = 0; z < world.num_contexts(); ++z) {
    estimator.contexts.push_back(world.context_name({z}));
  }
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    const PromptId prompt{x};
    const auto p = context_posterior(world, prompt);
    estimator.context_posterior[world.prompt_name(prompt)] = p;
    for (std::size_t z = 0; z < world.num_contexts(); ++z) {
      if (!(p[z] > 0.0)) continue;
      for (const CompletionId y : world.completions_of(prompt)) {
        estimator.values[{world.prompt_name(prompt), world.context_name({z}),
                          world.completion_name(y)}] =
            contextual_utility(world, prompt, ContextId{z}, y);
      }
    }
  }
  return estimator;
}

fit::Estimator perturbed_estimator(const World& world, double value_noise, double posterior_mix,
                                   std::uint64_t seed) {
  if (!(value_noise >= 0.0) || !(posterior_mix >= 0.0 && posterior_mix <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "value_noise must be >= 0 and posterior_mix in [0, 1]");
  }
  auto estimator = truth_estimator(world);
  Philox rng(seed);
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    for (std::size_t z = 0; z < world.num_contexts(); ++z) {
      for (const CompletionId y : world.completions_of(PromptId{x})) {
        auto& v = estimator.values[{world.prompt_name({x}), world.context_name({z}),
                                    world.completion_name(y)}];
        v += value_noise * standard_normal(rng);
      }
    }
  }
  for (auto& [prompt, row] : estimator.context_posterior) {
    std::vector<double> noise(row.size());
    double total = 0.0;
    for (auto& e : noise) {
      e = -std::log(1.0 - uniform01(rng));  // Dirichlet(1, ..., 1) draw
      total += e;
    }
    double sum = 0.0;
    for (std::size_t z = 0; z < row.size(); ++z) {
      row[z] = (1.0 - posterior_mix) * row[z] + posterior_mix * noise[z] / total;
      sum += row[z];
    }
    for (auto& v : row) v /= sum;
  }
  return estimator;
}

}  // namespace ctxpref::bound
