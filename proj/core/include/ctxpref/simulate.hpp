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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ctxpref/dataset.hpp"
#include "ctxpref/fit.hpp"
#include "ctxpref/world.hpp"

namespace ctxpref::simulate {

/// Reversal world: every prompt is produced by its own intents only, one
/// group per context, so p(z|x) is the (uniform by default) context prior.
/// On the first two completions of each prompt, contexts alternate the sign
/// of the utility gap, which has magnitude drawn from [margin_low, margin_high].
struct ReversalOptions {
  std::size_t prompts = 100;
  std::size_t contexts = 2;
  std::size_t completions_per_prompt = 2;
  std::size_t intents_per_context = 1;
  double margin_low = 2.0;
  double margin_high = 4.0;
};

World reversal_world(const ReversalOptions& options, std::uint64_t seed);

/// Dense random world: Dirichlet(1) prior and likelihood rows, N(0, 1)
/// utilities, a random partition with every context nonempty and between 2
/// and max_completions completions per prompt.
struct RandomWorldOptions {
  std::size_t intents = 6;
  std::size_t prompts = 4;
  std::size_t contexts = 3;
  std::size_t max_completions = 3;
  double utility_scale = 1.0;
};

World random_world(const RandomWorldOptions& options, std::uint64_t seed);

/// One prompt, one intent, two completions "a" and "b" with u(a) - u(b) = delta.
World two_completion_world(double delta);

/// Preference k uses Philox(derive_seed(seed, k)): a uniform prompt with two
/// or more completions, a context z ~ p(z|x), a uniform unordered pair, then a
/// Bradley-Terry draw under z. Records carry the context and source "oracle".
std::vector<dataset::PreferenceRecord> sample_preferences(const World& world, std::size_t n,
                                                          std::uint64_t seed,
                                                          const Annotator& annotator = {});

/// Same draw without conditioning on a context: the annotator uses the
/// prompt-level utilities and records carry no context.
std::vector<dataset::PreferenceRecord> sample_unconditioned_preferences(
    const World& world, std::size_t n, std::uint64_t seed, const Annotator& annotator = {});

/// One paired sample per prompt that has two contexts with opposite utility
/// gaps on its first two completions; the first such context pair is used,
/// oriented so that completion_a is preferred under context_a.
std::vector<dataset::PairedRprSample> reversal_pairs(const World& world);

/// Gold record for each (prompt, context, unordered pair) with a nonzero
/// contextual gap: chosen is the completion with the larger utility.
std::vector<dataset::PreferenceRecord> gold_records(const World& world);

/// Fit data from records; contexts are dropped when `keep_context` is false.
std::vector<fit::PreferenceDatum> to_data(std::span<const dataset::PreferenceRecord> records,
                                          bool keep_context);

/// fit_tabular on the records. The estimator lists the world's contexts and
/// carries a posterior fitted from the records' contexts with additive
/// `posterior_smoothing`, for context-aware and no-context fits alike.
fit::FitResult fit_records(const World& world, std::span<const dataset::PreferenceRecord> records,
                           const fit::FitOptions& options, double posterior_smoothing = 1.0);

/// Same with explicit prompt and context lists; no posterior when `contexts`
/// is empty.
fit::FitResult fit_records(std::span<const dataset::PreferenceRecord> records,
                           std::span<const std::string> prompts,
                           std::span<const std::string> contexts, const fit::FitOptions& options,
                           double posterior_smoothing = 1.0);

/// Prompts and contexts taken from the records, sorted.
fit::FitResult fit_records(std::span<const dataset::PreferenceRecord> records,
                           const fit::FitOptions& options, double posterior_smoothing = 1.0);

}  // namespace ctxpref::simulate
