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

#include "ctxpref/world.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "ctxpref/error.hpp"
#include "ctxpref/rng.hpp"

namespace ctxpref {
namespace {

constexpr double kProbabilityTolerance = 1e-9;

void check_names(const std::vector<std::string>& names, std::string_view what) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto& name = names[k];
    if (name.empty()) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("{}[{}] is empty", what, k));
    }
    for (const char c : name) {
      if (std::isspace(static_cast<unsigned char>(c)) || c == ':' || c == '#') {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("{} name '{}' contains whitespace, ':' or '#'", what, name));
      }
    }
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("duplicate {} name '{}'", what, name));
    }
  }
}

// Checks a probability vector and renormalizes float dust in place.
void normalize_distribution(std::span<double> values, const std::string& where) {
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k]) || values[k] < 0.0) {
      throw Error(ErrorCode::kInvalidDistribution,
                  fmt::format("{} entry {} is {} (must be finite and >= 0)", where, k,
                              values[k]));
    }
    sum += values[k];
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw Error(ErrorCode::kInvalidDistribution,
                fmt::format("{} sums to {:.17g}, not 1", where, sum));
  }
  // Sums already equal to 1 up to summation rounding are left alone so that
  // loading a saved world reproduces it bit for bit.
  const double rounding = static_cast<double>(values.size()) * std::numeric_limits<double>::epsilon();
  if (std::abs(sum - 1.0) <= rounding) return;
  for (auto& v : values) v /= sum;
}

struct Weighted {
  std::size_t intent;
  double weight;
};

// Posterior over the prompt's support only; zero entries are left out.
using SparsePosterior = std::vector<Weighted>;

SparsePosterior tempered(SparsePosterior posterior, double temperature) {
  if (temperature == 1.0) return posterior;
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "annotator temperature must be positive");
  }
  double sum = 0.0;
  for (auto& p : posterior) {
    p.weight = std::pow(p.weight, 1.0 / temperature);
    sum += p.weight;
  }
  for (auto& p : posterior) p.weight /= sum;
  return posterior;
}

double expected_utility(const World& world, const SparsePosterior& posterior,
                        CompletionId completion) {
  double value = 0.0;
  for (const auto& p : posterior) value += p.weight * world.utility(IntentId{p.intent}, completion);
  return value;
}

double restricted_utility(const World& world, const SparsePosterior& posterior,
                          ContextId context, CompletionId completion) {
  double mass = 0.0;
  double value = 0.0;
  for (const auto& p : posterior) {
    if (world.context_of(IntentId{p.intent}) != context) continue;
    mass += p.weight;
    value += p.weight * world.utility(IntentId{p.intent}, completion);
  }
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::kEmptyContext,
                fmt::format("context '{}' has zero posterior mass", world.context_name(context)));
  }
  return value / mass;
}

void check_prompt(const World& world, PromptId prompt) {
  if (prompt.value >= world.num_prompts()) {
    throw Error(ErrorCode::kUnresolvedId, fmt::format("prompt index {} out of range", prompt.value));
  }
}

void check_completion(const World& world, CompletionId completion) {
  if (completion.value >= world.num_completions()) {
    throw Error(ErrorCode::kUnresolvedId,
                fmt::format("completion index {} out of range", completion.value));
  }
}

SparsePosterior sparse_posterior(const World& world, PromptId prompt) {
  check_prompt(world, prompt);
  SparsePosterior posterior;
  posterior.reserve(world.support(prompt).size());
  double marginal = 0.0;
  for (const std::size_t i : world.support(prompt)) {
    const double w = world.prior(IntentId{i}) * world.likelihood(IntentId{i}, prompt);
    posterior.push_back({i, w});
    marginal += w;
  }
  if (!(marginal > 0.0)) {
    throw Error(ErrorCode::kZeroMarginal,
                fmt::format("no intent produces prompt '{}'", world.prompt_name(prompt)));
  }
  for (auto& p : posterior) p.weight /= marginal;
  return posterior;
}

}  // namespace

World World::create(WorldSpec spec) {
  check_names(spec.intents, "intent");
  check_names(spec.prompts, "prompt");
  check_names(spec.completions, "completion");
  check_names(spec.contexts, "context");
  const std::size_t n_intents = spec.intents.size();
  const std::size_t n_prompts = spec.prompts.size();
  const std::size_t n_completions = spec.completions.size();
  if (n_intents == 0 || n_prompts == 0 || spec.contexts.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "world needs at least one intent, prompt and context");
  }
  if (spec.completion_prompt.size() != n_completions) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("completion_prompt has {} entries for {} completions",
                            spec.completion_prompt.size(), n_completions));
  }
  for (std::size_t y = 0; y < n_completions; ++y) {
    if (spec.completion_prompt[y] >= n_prompts) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("completion '{}' refers to prompt index {}", spec.completions[y],
                              spec.completion_prompt[y]));
    }
  }
  if (spec.context_cells.size() != spec.contexts.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one cell is required per context");
  }
  std::vector<int> covered(n_intents, 0);
  for (std::size_t z = 0; z < spec.context_cells.size(); ++z) {
    if (spec.context_cells[z].empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("context '{}' has an empty cell", spec.contexts[z]));
    }
    for (const std::size_t i : spec.context_cells[z]) {
      if (i >= n_intents) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("context '{}' refers to intent index {}", spec.contexts[z], i));
      }
      if (++covered[i] > 1) {
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("intent '{}' appears in more than one context cell",
                                spec.intents[i]));
      }
    }
  }
  for (std::size_t i = 0; i < n_intents; ++i) {
    if (covered[i] == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("intent '{}' is not covered by any context", spec.intents[i]));
    }
  }
  if (spec.intent_prior.size() != n_intents) {
    throw Error(ErrorCode::kLengthMismatch, "intent_prior length differs from intents");
  }
  normalize_distribution(spec.intent_prior, "intent_prior");
  if (spec.prompt_given_intent.rows != n_intents || spec.prompt_given_intent.cols != n_prompts ||
      spec.prompt_given_intent.data.size() != n_intents * n_prompts) {
    throw Error(ErrorCode::kLengthMismatch, "prompt_given_intent must be intents x prompts");
  }
  for (std::size_t i = 0; i < n_intents; ++i) {
    normalize_distribution(
        std::span<double>(spec.prompt_given_intent.data.data() + i * n_prompts, n_prompts),
        fmt::format("prompt_given_intent row '{}'", spec.intents[i]));
  }
  if (spec.utility.rows != n_intents || spec.utility.cols != n_completions ||
      spec.utility.data.size() != n_intents * n_completions) {
    throw Error(ErrorCode::kLengthMismatch, "utility must be intents x completions");
  }
  for (std::size_t k = 0; k < spec.utility.data.size(); ++k) {
    if (!std::isfinite(spec.utility.data[k])) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("utility for intent '{}', completion '{}' is not finite",
                              spec.intents[k / n_completions],
                              spec.completions[k % n_completions]));
    }
  }
  return World(std::move(spec));
}

World::World(WorldSpec spec) : spec_(std::move(spec)) {
  intent_context_.resize(spec_.intents.size());
  for (std::size_t z = 0; z < spec_.context_cells.size(); ++z) {
    for (const std::size_t i : spec_.context_cells[z]) intent_context_[i] = ContextId{z};
  }
  prompt_completions_.resize(spec_.prompts.size());
  for (std::size_t y = 0; y < spec_.completions.size(); ++y) {
    prompt_completions_[spec_.completion_prompt[y]].push_back(CompletionId{y});
  }
  prompt_support_.resize(spec_.prompts.size());
  for (std::size_t i = 0; i < spec_.intents.size(); ++i) {
    if (!(spec_.intent_prior[i] > 0.0)) continue;
    for (std::size_t x = 0; x < spec_.prompts.size(); ++x) {
      if (spec_.prompt_given_intent(i, x) > 0.0) prompt_support_[x].push_back(i);
    }
  }
  for (std::size_t k = 0; k < spec_.prompts.size(); ++k) prompt_index_[spec_.prompts[k]] = k;
  for (std::size_t k = 0; k < spec_.completions.size(); ++k) {
    completion_index_[spec_.completions[k]] = k;
  }
  for (std::size_t k = 0; k < spec_.contexts.size(); ++k) context_index_[spec_.contexts[k]] = k;
}

std::optional<PromptId> World::find_prompt(std::string_view name) const {
  const auto it = prompt_index_.find(std::string(name));
  if (it == prompt_index_.end()) return std::nullopt;
  return PromptId{it->second};
}

std::optional<CompletionId> World::find_completion(std::string_view name) const {
  const auto it = completion_index_.find(std::string(name));
  if (it == completion_index_.end()) return std::nullopt;
  return CompletionId{it->second};
}

std::optional<ContextId> World::find_context(std::string_view name) const {
  const auto it = context_index_.find(std::string(name));
  if (it == context_index_.end()) return std::nullopt;
  return ContextId{it->second};
}

void validate_query(const World& world, const PreferenceQuery& query) {
  check_prompt(world, query.prompt);
  check_completion(world, query.first);
  check_completion(world, query.second);
  if (query.first == query.second) {
    throw Error(ErrorCode::kInvalidArgument, "query compares a completion with itself");
  }
  if (world.owner(query.first) != query.prompt || world.owner(query.second) != query.prompt) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("completions '{}' and '{}' are not both owned by prompt '{}'",
                            world.completion_name(query.first),
                            world.completion_name(query.second),
                            world.prompt_name(query.prompt)));
  }
  if (query.context && query.context->value >= world.num_contexts()) {
    throw Error(ErrorCode::kUnresolvedId, "context index out of range");
  }
}

std::vector<double> intent_posterior(const World& world, PromptId prompt) {
  std::vector<double> posterior(world.num_intents(), 0.0);
  for (const auto& p : sparse_posterior(world, prompt)) posterior[p.intent] = p.weight;
  return posterior;
}

std::vector<double> context_posterior(const World& world, PromptId prompt) {
  std::vector<double> result(world.num_contexts(), 0.0);
  for (const auto& p : sparse_posterior(world, prompt)) {
    result[world.context_of(IntentId{p.intent}).value] += p.weight;
  }
  return result;
}

double contextual_utility(const World& world, PromptId prompt, ContextId context,
                          CompletionId completion) {
  check_completion(world, completion);
  if (context.value >= world.num_contexts()) {
    throw Error(ErrorCode::kUnresolvedId, "context index out of range");
  }
  return restricted_utility(world, sparse_posterior(world, prompt), context, completion);
}

double prompt_utility(const World& world, PromptId prompt, CompletionId completion) {
  check_completion(world, completion);
  return expected_utility(world, sparse_posterior(world, prompt), completion);
}

double bt_probability(double delta) noexcept {
  if (delta >= 0.0) return 1.0 / (1.0 + std::exp(-delta));
  const double e = std::exp(delta);
  return e / (1.0 + e);
}

double query_delta(const World& world, const PreferenceQuery& query, const Annotator& annotator) {
  validate_query(world, query);
  const auto posterior =
      tempered(sparse_posterior(world, query.prompt), annotator.posterior_temperature);
  if (query.context) {
    return delta(restricted_utility(world, posterior, *query.context, query.first),
                 restricted_utility(world, posterior, *query.context, query.second));
  }
  return delta(expected_utility(world, posterior, query.first),
               expected_utility(world, posterior, query.second));
}

Choice sample_preference(const World& world, const PreferenceQuery& query, std::uint64_t seed,
                         const Annotator& annotator) {
  const double p_first = bt_probability(query_delta(world, query, annotator));
  Philox rng(seed);
  return uniform01(rng) < p_first ? Choice::kFirst : Choice::kSecond;
}

}  // namespace ctxpref
