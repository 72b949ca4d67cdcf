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

#include "ctxpref/aggregate.hpp"

#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ctxpref/error.hpp"
#include "ctxpref/rng.hpp"

namespace ctxpref::aggregate {
namespace {

AggregationResult argmax(std::vector<double> scores) {
  AggregationResult result;
  for (std::size_t a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[result.winner]) result.winner = a;
  }
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (a != result.winner && scores[a] == scores[result.winner]) result.tie_broken = true;
  }
  result.scores = std::move(scores);
  return result;
}

std::vector<double> weighted_values(const Table& utilities, const std::vector<double>& weights) {
  std::vector<double> values(utilities.cols, 0.0);
  for (std::size_t z = 0; z < utilities.rows; ++z) {
    for (std::size_t a = 0; a < utilities.cols; ++a) values[a] += weights[z] * utilities(z, a);
  }
  return values;
}

}  // namespace

void validate(const AggregationInstance& instance) {
  const auto& u = instance.utilities;
  if (u.cols < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two alternatives");
  if (u.rows == 0 || u.data.size() != u.rows * u.cols) {
    throw Error(ErrorCode::kInvalidArgument, "utility matrix is empty or ragged");
  }
  if (instance.context_weights.size() != u.rows) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} context weights for {} contexts", instance.context_weights.size(),
                            u.rows));
  }
  double sum = 0.0;
  for (const double w : instance.context_weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::kInvalidDistribution, "context weights must be finite and >= 0");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidDistribution,
                fmt::format("context weights sum to {:.17g}", sum));
  }
  for (const double v : u.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "utility is not finite");
  }
  if (instance.jury_weights && instance.jury_weights->size() != u.rows) {
    throw Error(ErrorCode::kLengthMismatch, "jury weights length differs from contexts");
  }
}

AggregationResult borda_winner(const AggregationInstance& instance) {
  validate(instance);
  const auto& u = instance.utilities;
  std::vector<double> scores(u.cols, 0.0);
  for (std::size_t z = 0; z < u.rows; ++z) {
    const double w = instance.context_weights[z];
    for (std::size_t a = 0; a < u.cols; ++a) {
      for (std::size_t b = 0; b < u.cols; ++b) {
        if (a == b) continue;
        if (u(z, a) > u(z, b)) {
          scores[a] += w;
        } else if (u(z, a) == u(z, b)) {
          scores[a] += 0.5 * w;
        }
      }
    }
  }
  return argmax(std::move(scores));
}

AggregationResult expected_utility_winner(const AggregationInstance& instance) {
  validate(instance);
  return argmax(weighted_values(instance.utilities, instance.context_weights));
}

AggregationResult jury_winner(const AggregationInstance& instance) {
  validate(instance);
  if (!instance.jury_weights) {
    throw Error(ErrorCode::kMissingJuryWeights, "instance has no jury weights");
  }
  std::vector<double> weights = *instance.jury_weights;
  double total = 0.0;
  for (const double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "jury weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kAllZeroWeights, "jury weights are all zero");
  for (auto& w : weights) w /= total;
  return argmax(weighted_values(instance.utilities, weights));
}

std::optional<AggregationInstance> find_divergent_instance(std::size_t n_contexts,
                                                           std::size_t n_alternatives,
                                                           std::uint64_t rng_seed,
                                                           std::size_t max_tries) {
  if (n_contexts == 0 || n_alternatives < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need >= 1 context and >= 2 alternatives");
  }
  for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
    Philox rng(derive_seed(rng_seed, attempt));
    AggregationInstance instance;
    instance.context_weights.resize(n_contexts);
    double total = 0.0;
    for (auto& w : instance.context_weights) {
      w = -std::log(1.0 - uniform01(rng));
      total += w;
    }
    if (!(total > 0.0)) continue;
    for (auto& w : instance.context_weights) w /= total;
    instance.utilities = Table(n_contexts, n_alternatives);
    for (auto& v : instance.utilities.data) v = 2.0 * uniform01(rng) - 1.0;
    if (borda_winner(instance).winner != expected_utility_winner(instance).winner) {
      return instance;
    }
  }
  return std::nullopt;
}

AggregationInstance divergence_witness() {
  AggregationInstance instance;
  instance.context_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  instance.utilities = Table(3, 2);
  instance.utilities.data = {10.0, 0.0, 0.0, 1.0, 0.0, 1.0};
  return instance;
}

AggregationInstance instance_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    AggregationInstance instance;
    instance.context_weights = doc.at("context_weights").get<std::vector<double>>();
    const auto rows = doc.at("utilities").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "utilities is empty");
    instance.utilities = Table(rows.size(), rows.front().size());
    for (std::size_t z = 0; z < rows.size(); ++z) {
      if (rows[z].size() != rows.front().size()) {
        throw Error(ErrorCode::kInvalidArgument, fmt::format("utilities row {} is ragged", z));
      }
      for (std::size_t a = 0; a < rows[z].size(); ++a) instance.utilities(z, a) = rows[z][a];
    }
    if (doc.contains("jury_weights") && !doc.at("jury_weights").is_null()) {
      instance.jury_weights = doc.at("jury_weights").get<std::vector<double>>();
    }
    validate(instance);
    return instance;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("aggregation instance: {}", e.what()));
  }
}

std::string instance_to_json(const AggregationInstance& instance) {
  nlohmann::ordered_json doc;
  doc["context_weights"] = instance.context_weights;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t z = 0; z < instance.utilities.rows; ++z) {
    const auto row = instance.utilities.row(z);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["utilities"] = std::move(rows);
  if (instance.jury_weights) doc["jury_weights"] = *instance.jury_weights;
  return doc.dump() + "\n";
}

}  // namespace ctxpref::aggregate
