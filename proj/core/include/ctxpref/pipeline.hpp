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
#include <string>

#include <nlohmann/json.hpp>

#include "ctxpref/bound.hpp"
#include "ctxpref/eval.hpp"
#include "ctxpref/fit.hpp"
#include "ctxpref/simulate.hpp"

namespace ctxpref::pipeline {

struct EndToEndOptions {
  simulate::ReversalOptions world{.prompts = 200};
  std::size_t train_preferences = 5000;
  fit::FitOptions fit;
  double posterior_smoothing = 1.0;
  std::size_t bound_queries = 10'000;
  std::size_t histogram_bins = 10;
  std::size_t workers = 1;
};

struct FitSummary {
  std::size_t cells = 0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

struct EndToEndReport {
  std::uint64_t seed = 0;
  std::size_t intents = 0;
  std::size_t prompts = 0;
  std::size_t contexts = 0;
  std::size_t completions = 0;
  std::size_t train_records = 0;
  std::size_t test_pairs = 0;
  FitSummary ctx_fit;
  FitSummary nc_fit;
  /// Context-aware fit under the ctx protocol, no-context fit under nc.
  eval::AgreementReport ctx;
  eval::AgreementReport nc;
  /// General bound between the world and each fitted estimator.
  bound::MonteCarloSummary ctx_bound;
  bound::MonteCarloSummary nc_bound;
};

/// Reversal world -> sampled preferences -> context-aware and no-context fits
/// -> agreement on the expanded reversal pairs -> Monte Carlo bound check.
/// Every stage derives its seed from `seed`; the report is independent of
/// `workers`. The first failing stage's error propagates.
EndToEndReport end_to_end(const EndToEndOptions& options, std::uint64_t seed);

/// Document shaped by schemas/end_to_end_report.schema.json.
nlohmann::ordered_json report_to_json(const EndToEndReport& report);
std::string format_report(const EndToEndReport& report);

nlohmann::ordered_json summary_to_json(const bound::MonteCarloSummary& summary);

}  // namespace ctxpref::pipeline
