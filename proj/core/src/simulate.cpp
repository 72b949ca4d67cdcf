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

#include "ctxpref/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "ctxpref/error.hpp"
#include "ctxpref/rng.hpp"

namespace ctxpref::simulate {
namespace {

double exponential(Philox& rng) { return -std::log1p(-uniform01(rng)); }

std::vector<double> dirichlet_ones(Philox& rng, std::size_t n) {
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) {
    x = exponential(rng) + 1e-12;
    total += x;
  }
  for (auto& x : v) x /= total;
  return v;
}

std::vector<PromptId> eligible_prompts(const World& world) {
  std::vector<PromptId> eligible;
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    if (world.completions_of(PromptId{x}).size() >= 2) eligible.push_back(PromptId{x});
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no prompt has two or more completions");
  }
  return eligible;
}

std::size_t draw_from(Philox& rng, const std::vector<double>& p) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] > 0.0)) continue;
    last = k;
    cumulative += p[k];
    if (u < cumulative) return k;
  }
  return last;
}

std::pair<CompletionId, CompletionId> draw_pair(Philox& rng, std::span<const CompletionId> options) {
  const auto a = uniform_index(rng, options.size());
  auto b = uniform_index(rng, options.size() - 1);
  if (b >= a) ++b;
  return {options[std::min(a, b)], options[std::max(a, b)]};
}

std::vector<dataset::PreferenceRecord> sample(const World& world, std::size_t n,
                                              std::uint64_t seed, const Annotator& annotator,
                                              bool conditioned) {
  const auto eligible = eligible_prompts(world);
  std::vector<std::vector<double>> posteriors(world.num_prompts());
  for (const auto x : eligible) posteriors[x.value] = context_posterior(world, x);

  std::vector<dataset::PreferenceRecord> records(n);
  for (std::size_t k = 0; k < n; ++k) {
    Philox rng(derive_seed(seed, k));
    PreferenceQuery query;
    query.prompt = eligible[uniform_index(rng, eligible.size())];
    if (conditioned) query.context = ContextId{draw_from(rng, posteriors[query.prompt.value])};
    std::tie(query.first, query.second) = draw_pair(rng, world.completions_of(query.prompt));
    const bool first_wins = sample_preference(world, query, rng(), annotator) == Choice::kFirst;

    auto& r = records[k];
    r.id = fmt::format("pref-{}", k);
    r.prompt = world.prompt_name(query.prompt);
    if (query.context) {
      r.context = world.context_name(*query.context);
      r.context_source = dataset::ContextSource::kOracle;
    }
    r.chosen = world.completion_name(first_wins ? query.first : query.second);
    r.rejected = world.completion_name(first_wins ? query.second : query.first);
  }
  return records;
}

}  // namespace

World reversal_world(const ReversalOptions& options, std::uint64_t seed) {
  if (options.prompts == 0) throw Error(ErrorCode::kInvalidArgument, "prompts must be positive");
  if (options.contexts < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a reversal world needs at least two contexts");
  }
  if (options.completions_per_prompt < 2) {
    throw Error(ErrorCode::kInvalidArgument, "completions_per_prompt must be at least 2");
  }
  if (options.intents_per_context == 0) {
    throw Error(ErrorCode::kInvalidArgument, "intents_per_context must be positive");
  }
  if (!(options.margin_low > 0.0) || !(options.margin_high >= options.margin_low) ||
      !std::isfinite(options.margin_high)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < margin_low <= margin_high");
  }
  const std::size_t n_x = options.prompts;
  const std::size_t n_z = options.contexts;
  const std::size_t n_y = options.completions_per_prompt;
  const std::size_t per = options.intents_per_context;
  const std::size_t n_i = n_x * n_z * per;

  WorldSpec spec;
  spec.contexts.reserve(n_z);
  for (std::size_t z = 0; z < n_z; ++z) spec.contexts.push_back(fmt::format("z{}", z));
  spec.context_cells.resize(n_z);
  for (std::size_t x = 0; x < n_x; ++x) {
    spec.prompts.push_back(fmt::format("x{}", x));
    for (std::size_t k = 0; k < n_y; ++k) {
      spec.completions.push_back(fmt::format("x{}y{}", x, k));
      spec.completion_prompt.push_back(x);
    }
  }
  spec.intent_prior.assign(n_i, 1.0 / static_cast<double>(n_i));
  spec.prompt_given_intent = Table(n_i, n_x);
  spec.utility = Table(n_i, n_x * n_y);

  Philox rng(seed);
  for (std::size_t x = 0; x < n_x; ++x) {
    std::vector<double> extra(n_y, 0.0);
    for (std::size_t k = 2; k < n_y; ++k) extra[k] = 2.0 * uniform01(rng) - 1.0;
    for (std::size_t z = 0; z < n_z; ++z) {
      const double margin =
          options.margin_low + (options.margin_high - options.margin_low) * uniform01(rng);
      const double sign = z % 2 == 0 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < per; ++j) {
        const std::size_t i = (x * n_z + z) * per + j;
        spec.intents.push_back(fmt::format("i{}_{}_{}", x, z, j));
        spec.context_cells[z].push_back(i);
        spec.prompt_given_intent(i, x) = 1.0;
        spec.utility(i, x * n_y) = sign * margin / 2.0;
        spec.utility(i, x * n_y + 1) = -sign * margin / 2.0;
        for (std::size_t k = 2; k < n_y; ++k) spec.utility(i, x * n_y + k) = extra[k];
      }
    }
  }
  return World::create(std::move(spec));
}

World random_world(const RandomWorldOptions& options, std::uint64_t seed) {
  if (options.contexts == 0 || options.intents < options.contexts || options.prompts == 0 ||
      options.max_completions < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "need contexts >= 1, intents >= contexts, prompts >= 1, max_completions >= 2");
  }
  Philox rng(seed);
  WorldSpec spec;
  for (std::size_t i = 0; i < options.intents; ++i) spec.intents.push_back(fmt::format("i{}", i));
  for (std::size_t z = 0; z < options.contexts; ++z) spec.contexts.push_back(fmt::format("z{}", z));
  spec.context_cells.resize(options.contexts);
  std::vector<std::size_t> order(options.intents);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(rng, order);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t z = k < options.contexts ? k : uniform_index(rng, options.contexts);
    spec.context_cells[z].push_back(order[k]);
  }
  for (auto& cell : spec.context_cells) std::sort(cell.begin(), cell.end());

  for (std::size_t x = 0; x < options.prompts; ++x) {
    spec.prompts.push_back(fmt::format("x{}", x));
    const std::size_t count = 2 + uniform_index(rng, options.max_completions - 1);
    for (std::size_t k = 0; k < count; ++k) {
      spec.completions.push_back(fmt::format("x{}y{}", x, k));
      spec.completion_prompt.push_back(x);
    }
  }
  spec.intent_prior = dirichlet_ones(rng, options.intents);
  spec.prompt_given_intent = Table(options.intents, options.prompts);
  for (std::size_t i = 0; i < options.intents; ++i) {
    const auto row = dirichlet_ones(rng, options.prompts);
    std::copy(row.begin(), row.end(), spec.prompt_given_intent.data.begin() +
                                          static_cast<std::ptrdiff_t>(i * options.prompts));
  }
  spec.utility = Table(options.intents, spec.completions.size());
  for (auto& u : spec.utility.data) u = options.utility_scale * standard_normal(rng);
  return World::create(std::move(spec));
}

World two_completion_world(double delta) {
  WorldSpec spec;
  spec.intents = {"i0"};
  spec.prompts = {"x0"};
  spec.completions = {"a", "b"};
  spec.completion_prompt = {0, 0};
  spec.contexts = {"z0"};
  spec.context_cells = {{0}};
  spec.intent_prior = {1.0};
  spec.prompt_given_intent = Table(1, 1, 1.0);
  spec.utility = Table(1, 2);
  spec.utility(0, 0) = delta / 2.0;
  spec.utility(0, 1) = -delta / 2.0;
  return World::create(std::move(spec));
}

std::vector<dataset::PreferenceRecord> sample_preferences(const World& world, std::size_t n,
                                                          std::uint64_t seed,
                                                          const Annotator& annotator) {
  return sample(world, n, seed, annotator, true);
}

std::vector<dataset::PreferenceRecord> sample_unconditioned_preferences(
    const World& world, std::size_t n, std::uint64_t seed, const Annotator& annotator) {
  return sample(world, n, seed, annotator, false);
}

std::vector<dataset::PairedRprSample> reversal_pairs(const World& world) {
  std::vector<dataset::PairedRprSample> pairs;
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    const PromptId prompt{x};
    const auto options = world.completions_of(prompt);
    if (options.size() < 2) continue;
    const auto mass = context_posterior(world, prompt);
    std::vector<std::pair<std::size_t, double>> gaps;
    for (std::size_t z = 0; z < world.num_contexts(); ++z) {
      if (!(mass[z] > 0.0)) continue;
      gaps.emplace_back(z, contextual_utility(world, prompt, ContextId{z}, options[0]) -
                               contextual_utility(world, prompt, ContextId{z}, options[1]));
    }
    bool found = false;
    for (std::size_t a = 0; a < gaps.size() && !found; ++a) {
      for (std::size_t b = a + 1; b < gaps.size() && !found; ++b) {
        if (gaps[a].second * gaps[b].second >= 0.0) continue;
        found = true;
        const bool a_prefers_first = gaps[a].second > 0.0;
        dataset::PairedRprSample s;
        s.id = world.prompt_name(prompt);
        s.prompt = world.prompt_name(prompt);
        s.context_a = world.context_name(ContextId{gaps[a].first});
        s.context_b = world.context_name(ContextId{gaps[b].first});
        s.completion_a = world.completion_name(a_prefers_first ? options[0] : options[1]);
        s.completion_b = world.completion_name(a_prefers_first ? options[1] : options[0]);
        pairs.push_back(std::move(s));
      }
    }
  }
  return pairs;
}

std::vector<dataset::PreferenceRecord> gold_records(const World& world) {
  std::vector<dataset::PreferenceRecord> records;
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    const PromptId prompt{x};
    const auto options = world.completions_of(prompt);
    const auto mass = context_posterior(world, prompt);
    for (std::size_t z = 0; z < world.num_contexts(); ++z) {
      if (!(mass[z] > 0.0)) continue;
      const ContextId context{z};
      for (std::size_t a = 0; a < options.size(); ++a) {
        for (std::size_t b = a + 1; b < options.size(); ++b) {
          const double gap = contextual_utility(world, prompt, context, options[a]) -
                             contextual_utility(world, prompt, context, options[b]);
          if (gap == 0.0) continue;
          dataset::PreferenceRecord r;
          r.id = fmt::format("gold-{}-{}-{}-{}", x, z, a, b);
          r.prompt = world.prompt_name(prompt);
          r.context = world.context_name(context);
          r.context_source = dataset::ContextSource::kOracle;
          r.chosen = world.completion_name(gap > 0.0 ? options[a] : options[b]);
          r.rejected = world.completion_name(gap > 0.0 ? options[b] : options[a]);
          records.push_back(std::move(r));
        }
      }
    }
  }
  return records;
}

std::vector<fit::PreferenceDatum> to_data(std::span<const dataset::PreferenceRecord> records,
                                          bool keep_context) {
  std::vector<fit::PreferenceDatum> data;
  data.reserve(records.size());
  for (const auto& r : records) {
    data.push_back({r.prompt, r.chosen, r.rejected, keep_context ? r.context : std::nullopt});
  }
  return data;
}

fit::FitResult fit_records(const World& world, std::span<const dataset::PreferenceRecord> records,
                           const fit::FitOptions& options, double posterior_smoothing) {
  std::vector<std::string> prompts, contexts;
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    prompts.push_back(world.prompt_name(PromptId{x}));
  }
  for (std::size_t z = 0; z < world.num_contexts(); ++z) {
    contexts.push_back(world.context_name(ContextId{z}));
  }
  return fit_records(records, prompts, contexts, options, posterior_smoothing);
}

fit::FitResult fit_records(std::span<const dataset::PreferenceRecord> records,
                           std::span<const std::string> prompts,
                           std::span<const std::string> contexts, const fit::FitOptions& options,
                           double posterior_smoothing) {
  auto result = fit::fit_tabular(to_data(records, options.context_aware), options);
  auto& estimator = result.estimator;
  estimator.contexts.assign(contexts.begin(), contexts.end());
  if (!contexts.empty()) {
    estimator.context_posterior = fit::fit_context_posterior(to_data(records, true), prompts,
                                                             contexts, posterior_smoothing);
  }
  return result;
}

fit::FitResult fit_records(std::span<const dataset::PreferenceRecord> records,
                           const fit::FitOptions& options, double posterior_smoothing) {
  std::set<std::string> prompts, contexts;
  for (const auto& r : records) {
    prompts.insert(r.prompt);
    if (r.context) contexts.insert(*r.context);
  }
  const std::vector<std::string> prompt_list(prompts.begin(), prompts.end());
  const std::vector<std::string> context_list(contexts.begin(), contexts.end());
  return fit_records(records, prompt_list, context_list, options, posterior_smoothing);
}

}  // namespace ctxpref::simulate
