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

#include "ctxpref/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ctxpref/error.hpp"
#include "ctxpref/parallel.hpp"
#include "ctxpref/rng.hpp"

namespace ctxpref::eval {
namespace {

constexpr double kZ95 = 1.96;

std::uint64_t hash_fields(std::uint64_t seed, std::initializer_list<std::string_view> fields) {
  std::uint64_t h = fnv1a64({reinterpret_cast<const char*>(&seed), sizeof seed});
  for (const auto field : fields) {
    h = fnv1a64(field, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return derive_seed(seed, h);
}

double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

void check_counts(std::size_t successes, std::size_t n) {
  if (n == 0 || successes > n) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("interval needs 0 <= successes <= n and n > 0, got ({}, {})",
                            successes, n));
  }
}

}  // namespace

double EstimatorScorer::score(std::string_view prompt, std::string_view completion,
                              std::optional<std::string_view> context) const {
  return estimator_.score(prompt, context, completion);
}

std::string EstimatorScorer::name() const {
  return std::string(fit::to_string(estimator_.kind));
}

double RandomScorer::score(std::string_view prompt, std::string_view completion,
                           std::optional<std::string_view> context) const {
  return to_unit(hash_fields(seed_, {prompt, completion, context ? "1" : "0",
                                     context.value_or(std::string_view{})}));
}

double WorldScorer::score(std::string_view prompt, std::string_view completion,
                          std::optional<std::string_view> context) const {
  const auto x = world_->find_prompt(prompt);
  const auto y = world_->find_completion(completion);
  if (!x || !y || world_->owner(*y) != *x) {
    throw Error(ErrorCode::kUnresolvedId,
                fmt::format("world has no completion '{}' for prompt '{}'", completion, prompt));
  }
  if (context) {
    if (const auto z = world_->find_context(*context)) {
      return contextual_utility(*world_, *x, *z, *y);
    }
  }
  return prompt_utility(*world_, *x, *y);
}

ObedientOracleScorer::ObedientOracleScorer(std::span<const dataset::PreferenceRecord> gold,
                                           std::uint64_t seed)
    : random_(seed) {
  for (const auto& r : gold) {
    quality_[{r.prompt, r.chosen}] = 1.0;
    quality_.try_emplace({r.prompt, r.rejected}, 0.0);
  }
}

double ObedientOracleScorer::score(std::string_view prompt, std::string_view completion,
                                   std::optional<std::string_view> context) const {
  if (context && *context == dataset::adversarial_context(dataset::AdversarialVariant::kNonsense)) {
    return random_.score(prompt, completion, context);
  }
  const auto it = quality_.find(std::pair<std::string, std::string>(prompt, completion));
  const double q = it == quality_.end() ? 0.5 : it->second;
  if (context && *context == dataset::adversarial_context(dataset::AdversarialVariant::kNegative)) {
    return 1.0 - q;
  }
  return q;
}

bool tie_prefers_lower(std::uint64_t rng_seed, std::string_view prompt, std::string_view a,
                       std::string_view b) {
  return to_unit(hash_fields(rng_seed, {prompt, std::min(a, b), std::max(a, b)})) < 0.5;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kCorrect: return "correct";
    case Outcome::kIncorrect: return "incorrect";
    case Outcome::kTieCorrect: return "tie-randomized-correct";
    case Outcome::kTieIncorrect: return "tie-randomized-incorrect";
  }
  return "incorrect";
}

Outcome compare(const Scorer& scorer, const dataset::PreferenceRecord& record,
                std::uint64_t rng_seed, double tie_epsilon) {
  double chosen = 0.0;
  double rejected = 0.0;
  const std::optional<std::string_view> context =
      record.context ? std::optional<std::string_view>(*record.context) : std::nullopt;
  try {
    chosen = scorer.score(record.prompt, record.chosen, context);
    rejected = scorer.score(record.prompt, record.rejected, context);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kScorerFailure,
                fmt::format("record '{}' ({}): {}", record.id, scorer.name(), e.what()));
  }
  if (!std::isfinite(chosen) || !std::isfinite(rejected)) {
    throw Error(ErrorCode::kScorerFailure,
                fmt::format("record '{}' ({}): non-finite score", record.id, scorer.name()));
  }
  if (std::abs(chosen - rejected) > tie_epsilon) {
    return chosen > rejected ? Outcome::kCorrect : Outcome::kIncorrect;
  }
  const bool low_wins =
      tie_prefers_lower(rng_seed, record.prompt, record.chosen, record.rejected);
  const bool chosen_wins = low_wins == (record.chosen < record.rejected);
  return chosen_wins ? Outcome::kTieCorrect : Outcome::kTieIncorrect;
}

std::pair<double, double> wald_interval(std::size_t successes, std::size_t n) {
  check_counts(successes, n);
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  const double half = kZ95 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  return {std::clamp(p - half, 0.0, 1.0), std::clamp(p + half, 0.0, 1.0)};
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n) {
  check_counts(successes, n);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = kZ95 / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
}

double expected_score_from_logits(std::span<const double> logits,
                                  std::span<const double> score_values) {
  if (logits.size() != score_values.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} logits for {} score values", logits.size(), score_values.size()));
  }
  if (logits.empty()) throw Error(ErrorCode::kLengthMismatch, "no logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(top)) throw Error(ErrorCode::kInvalidArgument, "logits are not finite");
  double mass = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double w = std::exp(logits[k] - top);
    mass += w;
    weighted += w * score_values[k];
  }
  return weighted / mass;
}

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::kNc: return "nc";
    case Protocol::kCtx: return "ctx";
    case Protocol::kNonsense: return "nonsense";
    case Protocol::kNegative: return "negative";
  }
  return "ctx";
}

std::optional<Protocol> protocol_from_string(std::string_view text) {
  for (const auto p : {Protocol::kNc, Protocol::kCtx, Protocol::kNonsense, Protocol::kNegative}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::string_view to_string(Target target) {
  switch (target) {
    case Target::kMaximize: return "maximize";
    case Target::kHalf: return "target-0.5";
    case Target::kMinimize: return "minimize";
  }
  return "maximize";
}

Target target_of(Protocol protocol) {
  switch (protocol) {
    case Protocol::kNonsense: return Target::kHalf;
    case Protocol::kNegative: return Target::kMinimize;
    default: return Target::kMaximize;
  }
}

AgreementReport evaluate(const Scorer& scorer, std::span<const dataset::PreferenceRecord> records,
                         std::uint64_t rng_seed, const EvalOptions& options) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "no records to evaluate");
  if (!(options.tie_epsilon >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tie_epsilon must be >= 0");
  }
  AgreementReport report;
  report.scorer = scorer.name();
  report.interval = options.interval;
  report.outcomes.resize(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t k) {
    report.outcomes[k] = compare(scorer, records[k], rng_seed, options.tie_epsilon);
  });
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto outcome = report.outcomes[k];
    ++report.n;
    if (is_correct(outcome)) ++report.agree;
    if (is_tie(outcome)) ++report.ties_randomized;
    if (records[k].subset) {
      auto& s = report.per_subset[*records[k].subset];
      ++s.n;
      if (is_correct(outcome)) ++s.agree;
    }
  }
  report.agreement = static_cast<double>(report.agree) / static_cast<double>(report.n);
  std::tie(report.ci_low, report.ci_high) = options.interval == IntervalKind::kWald
                                                ? wald_interval(report.agree, report.n)
                                                : wilson_interval(report.agree, report.n);
  for (auto& [name, s] : report.per_subset) {
    s.agreement = static_cast<double>(s.agree) / static_cast<double>(s.n);
  }
  return report;
}

std::vector<dataset::PreferenceRecord> apply_protocol(
    std::span<const dataset::PreferenceRecord> records, Protocol protocol) {
  switch (protocol) {
    case Protocol::kNonsense:
      return dataset::attach_adversarial_context(records, dataset::AdversarialVariant::kNonsense);
    case Protocol::kNegative:
      return dataset::attach_adversarial_context(records, dataset::AdversarialVariant::kNegative);
    case Protocol::kNc: {
      std::vector<dataset::PreferenceRecord> out(records.begin(), records.end());
      for (auto& r : out) {
        r.context.reset();
        r.context_source.reset();
      }
      return out;
    }
    case Protocol::kCtx:
      for (const auto& r : records) {
        if (!r.context) {
          throw Error(ErrorCode::kMalformedRecord,
                      fmt::format("record '{}' has no context for the ctx protocol", r.id));
        }
      }
      return {records.begin(), records.end()};
  }
  return {records.begin(), records.end()};
}

AgreementReport run_protocol(const Scorer& scorer,
                             std::span<const dataset::PreferenceRecord> records, Protocol protocol,
                             std::uint64_t rng_seed, const EvalOptions& options) {
  const auto transformed = apply_protocol(records, protocol);
  auto report = evaluate(scorer, transformed, rng_seed, options);
  report.protocol = protocol;
  report.target = target_of(protocol);
  return report;
}

nlohmann::ordered_json report_to_json(const AgreementReport& report) {
  nlohmann::ordered_json doc;
  doc["scorer"] = report.scorer;
  if (report.protocol) doc["protocol"] = to_string(*report.protocol);
  if (report.target) doc["target"] = to_string(*report.target);
  doc["n"] = report.n;
  doc["agree"] = report.agree;
  doc["ties_randomized"] = report.ties_randomized;
  doc["agreement"] = report.agreement;
  doc["interval"] = report.interval == IntervalKind::kWald ? "wald" : "wilson";
  doc["ci_low"] = report.ci_low;
  doc["ci_high"] = report.ci_high;
  if (!report.per_subset.empty()) {
    auto subsets = nlohmann::ordered_json::object();
    for (const auto& [name, s] : report.per_subset) {
      subsets[name] = {{"n", s.n}, {"agree", s.agree}, {"agreement", s.agreement}};
    }
    doc["per_subset"] = std::move(subsets);
  }
  return doc;
}

std::string format_report(const AgreementReport& report) {
  std::string out = fmt::format("scorer     {}\n", report.scorer);
  if (report.protocol) {
    out += fmt::format("protocol   {} ({})\n", to_string(*report.protocol),
                       to_string(*report.target));
  }
  out += fmt::format("records    {}\nagree      {}\nties       {}\n", report.n, report.agree,
                     report.ties_randomized);
  out += fmt::format("agreement  {:.3f}  95% {} ({:.3f}, {:.3f})\n", report.agreement,
                     report.interval == IntervalKind::kWald ? "Wald" : "Wilson", report.ci_low,
                     report.ci_high);
  if (!report.per_subset.empty()) {
    std::size_t width = 6;
    for (const auto& [name, s] : report.per_subset) width = std::max(width, name.size());
    out += fmt::format("\n{:<{}}  {:>6}  {:>9}\n", "subset", width, "n", "agreement");
    for (const auto& [name, s] : report.per_subset) {
      out += fmt::format("{:<{}}  {:>6}  {:>9.3f}\n", name, width, s.n, s.agreement);
    }
  }
  return out;
}

std::string outcomes_to_jsonl(std::span<const dataset::PreferenceRecord> records,
                              std::span<const Outcome> outcomes) {
  if (records.size() != outcomes.size()) {
    throw Error(ErrorCode::kLengthMismatch, "records and outcomes differ in length");
  }
  std::string out;
  for (std::size_t k = 0; k < records.size(); ++k) {
    nlohmann::ordered_json line;
    line["id"] = records[k].id;
    line["outcome"] = to_string(outcomes[k]);
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace ctxpref::eval
