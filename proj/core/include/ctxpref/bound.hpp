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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxpref/fit.hpp"
#include "ctxpref/world.hpp"

namespace ctxpref::bound {

/// Absolute slack allowed for rounding when checking lhs <= rhs.
inline constexpr double kTolerance = 1e-9;

/// Both sides of the context decomposition bound for one query.
struct BoundReport {
  double lhs = 0.0;               // |Delta - Delta-hat|
  double prediction_term = 0.0;   // context-weighted prediction error
  double inference_term = 0.0;    // preference-weighted inference error
  double rhs = 0.0;               // prediction_term + inference_term
  bool holds = true;              // lhs <= rhs + kTolerance

  double slack() const noexcept { return rhs - lhs; }
};

/// General bound over a context distribution:
///   |sum p Delta - sum p-hat Delta-hat|
///     <= sum p |Delta - Delta-hat| + sum |Delta-hat| |p - p-hat|.
/// Throws kLengthMismatch or kInvalidDistribution on bad input.
BoundReport general_bound(std::span<const double> true_context_dist,
                          std::span<const double> est_context_dist,
                          std::span<const double> true_deltas,
                          std::span<const double> est_deltas);

/// Specific-context bound for a true context c and a predicted context c-hat:
///   |Delta_c - Delta-hat_{c-hat}|
///     <= |Delta_c - Delta-hat_c| + |Delta-hat_c - Delta-hat_{c-hat}|.
BoundReport specific_bound(double true_delta_at_c, double est_delta_at_c,
                           double est_delta_at_chat);

struct MonteCarloSummary {
  std::size_t queries = 0;
  std::size_t violations = 0;
  double max_slack = 0.0;
  double min_slack = 0.0;
  double max_lhs = 0.0;
  /// Equal-width slack histogram over [0, max_slack]; all mass lands in the
  /// first bin when max_slack == 0.
  std::vector<std::size_t> histogram;
  /// Index and report of the first violating query, if any.
  std::optional<std::size_t> first_violation_index;
  std::optional<BoundReport> first_violation;
};

/// Samples `n_queries` queries (uniform prompt among prompts with at least two
/// completions, then a uniform unordered completion pair) and evaluates the
/// general bound between the world and the estimator for each. Query k uses
/// seed derive_seed(rng_seed, k), so the summary does not depend on `workers`.
///
/// Contexts with zero true posterior mass contribute Delta_z = 0 (their weight
/// is zero on the true side). The estimator must carry a posterior row for
/// every sampled prompt and list the world's contexts.
MonteCarloSummary verify_bounds_monte_carlo(const World& world, const fit::Estimator& estimator,
                                            std::size_t n_queries, std::uint64_t rng_seed,
                                            std::size_t workers = 1,
                                            std::size_t histogram_bins = 10);

/// Estimator whose tables equal the world's contextual utilities and whose
/// posterior is the true p(z|x).
fit::Estimator truth_estimator(const World& world);

/// truth_estimator with N(0, value_noise^2) added to every value and each
/// posterior row mixed toward a random distribution with weight
/// `posterior_mix` in [0, 1].
fit::Estimator perturbed_estimator(const World& world, double value_noise, double posterior_mix,
                                   std::uint64_t seed);

}  // namespace ctxpref::bound
