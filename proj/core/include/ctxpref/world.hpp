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

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctxpref {

template <typename Tag>
struct Index {
  std::size_t value = 0;
  friend auto operator<=>(const Index&, const Index&) = default;
};

using IntentId = Index<struct IntentTag>;
using PromptId = Index<struct PromptTag>;
using CompletionId = Index<struct CompletionTag>;
using ContextId = Index<struct ContextTag>;

/// Dense row-major table of doubles.
struct Table {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Table() = default;
  Table(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

/// Unvalidated world description. `World::create` checks every invariant.
struct WorldSpec {
  std::vector<std::string> intents;
  std::vector<std::string> prompts;
  std::vector<std::string> completions;
  /// Owning prompt (index into `prompts`) of each completion.
  std::vector<std::size_t> completion_prompt;
  std::vector<std::string> contexts;
  /// Intent indices of each context cell; cells must partition the intents.
  std::vector<std::vector<std::size_t>> context_cells;
  std::vector<double> intent_prior;
  Table prompt_given_intent;  // intents x prompts
  Table utility;              // intents x completions
};

/// Finite intent-utility world: intents, prompts, completions, a context
/// partition over intents, p(i), p(x|i) and u(i, y). Immutable once built.
class World {
 public:
  /// Validates `spec`. Probability vectors within 1e-9 of normalized are
  /// renormalized; anything else is rejected with kInvalidDistribution.
  static World create(WorldSpec spec);

  const WorldSpec& spec() const noexcept { return spec_; }

  std::size_t num_intents() const noexcept { return spec_.intents.size(); }
  std::size_t num_prompts() const noexcept { return spec_.prompts.size(); }
  std::size_t num_completions() const noexcept { return spec_.completions.size(); }
  std::size_t num_contexts() const noexcept { return spec_.contexts.size(); }

  const std::string& intent_name(IntentId i) const { return spec_.intents[i.value]; }
  const std::string& prompt_name(PromptId x) const { return spec_.prompts[x.value]; }
  const std::string& completion_name(CompletionId y) const {
    return spec_.completions[y.value];
  }
  const std::string& context_name(ContextId z) const { return spec_.contexts[z.value]; }

  std::optional<PromptId> find_prompt(std::string_view name) const;
  std::optional<CompletionId> find_completion(std::string_view name) const;
  std::optional<ContextId> find_context(std::string_view name) const;

  PromptId owner(CompletionId y) const { return {spec_.completion_prompt[y.value]}; }
  ContextId context_of(IntentId i) const { return intent_context_[i.value]; }
  std::span<const CompletionId> completions_of(PromptId x) const {
    return prompt_completions_[x.value];
  }
  std::span<const std::size_t> cell(ContextId z) const {
    return spec_.context_cells[z.value];
  }
  /// Intents with p(i) p(x|i) > 0, ascending.
  std::span<const std::size_t> support(PromptId x) const { return prompt_support_[x.value]; }

  double prior(IntentId i) const { return spec_.intent_prior[i.value]; }
  double likelihood(IntentId i, PromptId x) const {
    return spec_.prompt_given_intent(i.value, x.value);
  }
  double utility(IntentId i, CompletionId y) const {
    return spec_.utility(i.value, y.value);
  }

 private:
  explicit World(WorldSpec spec);

  WorldSpec spec_;
  std::vector<ContextId> intent_context_;
  std::vector<std::vector<CompletionId>> prompt_completions_;
  std::vector<std::vector<std::size_t>> prompt_support_;
  std::unordered_map<std::string, std::size_t> prompt_index_;
  std::unordered_map<std::string, std::size_t> completion_index_;
  std::unordered_map<std::string, std::size_t> context_index_;
};

struct PreferenceQuery {
  PromptId prompt;
  CompletionId first;
  CompletionId second;
  std::optional<ContextId> context;
};

enum class Choice { kFirst, kSecond };

/// Throws kInvalidArgument unless the completions differ and belong to the prompt.
void validate_query(const World& world, const PreferenceQuery& query);

/// p(i|x) proportional to p(i) p(x|i). Throws kZeroMarginal if p(x) = 0.
std::vector<double> intent_posterior(const World& world, PromptId prompt);

/// p(z|x): posterior mass of each context cell.
std::vector<double> context_posterior(const World& world, PromptId prompt);

/// u((x,z), y): expected utility under p(i|x) restricted to cell z.
/// Throws kEmptyContext when the cell has no posterior mass.
double contextual_utility(const World& world, PromptId prompt, ContextId context,
                          CompletionId completion);

/// u(x, y): expected utility under p(i|x).
double prompt_utility(const World& world, PromptId prompt, CompletionId completion);

inline double delta(double u_first, double u_second) noexcept {
  return u_first - u_second;
}

/// Logistic function, evaluated without overflow for any finite input.
double bt_probability(double delta) noexcept;

/// How an annotator's inferred intent distribution departs from p(i|x).
/// A temperature of 1 is the exact posterior; larger values flatten it
/// toward uniform over the support, smaller values sharpen it.
struct Annotator {
  double posterior_temperature = 1.0;
};

/// Utility difference the annotator acts on for `query`: contextual when the
/// query carries a context, prompt-level otherwise.
double query_delta(const World& world, const PreferenceQuery& query,
                   const Annotator& annotator = {});

/// One Bernoulli draw with parameter bt_probability(query_delta). The draw
/// is a pure function of (world, query, seed).
Choice sample_preference(const World& world, const PreferenceQuery& query,
                         std::uint64_t seed, const Annotator& annotator = {});

/// Plain-text world file. Tables are written one row per line; numbers use
/// the shortest representation that round-trips.
void write_world(std::ostream& out, const World& world);
World read_world(std::istream& in);
World load_world(const std::string& path);
void save_world(const std::string& path, const World& world);

}  // namespace ctxpref
