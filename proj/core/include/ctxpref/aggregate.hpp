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
#include <string>
#include <vector>

#include "ctxpref/world.hpp"

namespace ctxpref::aggregate {

/// Utilities of several alternatives under each hidden context, with the
/// population weight of each context and optional jury weights.
struct AggregationInstance {
  std::vector<double> context_weights;
  Table utilities;  // contexts x alternatives
  std::optional<std::vector<double>> jury_weights;
};

/// Throws unless weights form a distribution (within 1e-9), the matrix is
/// finite and there are at least two alternatives.
void validate(const AggregationInstance& instance);

struct AggregationResult {
  std::size_t winner = 0;
  std::vector<double> scores;
  /// True when the winning score was shared and the lowest index was taken.
  bool tie_broken = false;
};

/// Weighted Borda count: alternative a earns weight(z) for every alternative
/// it strictly beats under z and weight(z) / 2 for each exact tie.
AggregationResult borda_winner(const AggregationInstance& instance);

/// value(a) = sum_z weight(z) u(z, a).
AggregationResult expected_utility_winner(const AggregationInstance& instance);

/// Expected utility under the renormalized jury weights. Throws
/// kMissingJuryWeights or kAllZeroWeights.
AggregationResult jury_winner(const AggregationInstance& instance);

/// Random search (uniform weights from a normalized exponential draw,
/// utilities uniform on [-1, 1]) for an instance where the Borda and
/// expected-utility winners differ. Try k draws from derive_seed(seed, k).
std::optional<AggregationInstance> find_divergent_instance(std::size_t n_contexts,
                                                           std::size_t n_alternatives,
                                                           std::uint64_t rng_seed,
                                                           std::size_t max_tries);

/// Three equally weighted contexts over two alternatives: context 1 strongly
/// prefers alternative 1 (10 vs 0), contexts 2 and 3 mildly prefer
/// alternative 2 (0 vs 1). Borda picks alternative 2, expected utility 1.
AggregationInstance divergence_witness();

AggregationInstance instance_from_json(const std::string& text);
std::string instance_to_json(const AggregationInstance& instance);

}  // namespace ctxpref::aggregate
