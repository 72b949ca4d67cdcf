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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxpref/dataset.hpp"
#include "ctxpref/fit.hpp"
#include "ctxpref/world.hpp"

namespace ctxpref::eval {

/// Scores one completion at a time ("reward model"). Implementations must be
/// deterministic for fixed inputs and safe to call from several threads.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::string_view prompt, std::string_view completion,
                       std::optional<std::string_view> context) const = 0;
  virtual std::string name() const = 0;
};

/// Tabular estimator lookup; see fit::Estimator::score.
class EstimatorScorer final : public Scorer {
 public:
  explicit EstimatorScorer(fit::Estimator estimator) : estimator_(std::move(estimator)) {}
  double score(std::string_view prompt, std::string_view completion,
               std::optional<std::string_view> context) const override;
  std::string name() const override;
  const fit::Estimator& estimator() const noexcept { return estimator_; }

 private:
  fit::Estimator estimator_;
};

/// Uniform [0, 1) score hashed from (seed, prompt, completion, context).
class RandomScorer final : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  double score(std::string_view prompt, std::string_view completion,
               std::optional<std::string_view> context) const override;
  std::string name() const override { return "random"; }

 private:
  std::uint64_t seed_;
};

class ConstantScorer final : public Scorer {
 public:
  explicit ConstantScorer(double value = 0.0) : value_(value) {}
  double score(std::string_view, std::string_view,
               std::optional<std::string_view>) const override {
    return value_;
  }
  std::string name() const override { return "constant"; }

 private:
  double value_;
};

/// Ground-truth utilities of a world, looked up by name: contextual utility
/// when the context names a world context, prompt-level utility otherwise.
class WorldScorer final : public Scorer {
 public:
  explicit WorldScorer(std::shared_ptr<const World> world) : world_(std::move(world)) {}
  double score(std::string_view prompt, std::string_view completion,
               std::optional<std::string_view> context) const override;
  std::string name() const override { return "world-oracle"; }

 private:
  std::shared_ptr<const World> world_;
};

/// Oracle that knows the gold label of every record and follows instructions:
/// 1 for the gold-chosen completion and 0 for the rejected one, a hashed
/// random score under the nonsense criteria and the inverted score under the
/// negative criteria.
class ObedientOracleScorer final : public Scorer {
 public:
  ObedientOracleScorer(std::span<const dataset::PreferenceRecord> gold, std::uint64_t seed);
  double score(std::string_view prompt, std::string_view completion,
               std::optional<std::string_view> context) const override;
  std::string name() const override { return "obedient-oracle"; }

 private:
  std::map<std::pair<std::string, std::string>, double, std::less<>> quality_;
  RandomScorer random_;
};

/// Adapter for ad-hoc scoring functions.
class FunctionScorer final : public Scorer {
 public:
  using Fn = std::function<double(std::string_view, std::string_view,
                                  std::optional<std::string_view>)>;
  FunctionScorer(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  double score(std::string_view prompt, std::string_view completion,
               std::optional<std::string_view> context) const override {
    return fn_(prompt, completion, context);
  }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
};

/// Fair coin for a tie between completions `a` and `b` of `prompt`; true
/// means the lexicographically smaller completion wins. Symmetric in a and b.
bool tie_prefers_lower(std::uint64_t rng_seed, std::string_view prompt, std::string_view a,
                       std::string_view b);

enum class Outcome { kCorrect, kIncorrect, kTieCorrect, kTieIncorrect };

std::string_view to_string(Outcome outcome);
inline bool is_correct(Outcome o) { return o == Outcome::kCorrect || o == Outcome::kTieCorrect; }
inline bool is_tie(Outcome o) { return o == Outcome::kTieCorrect || o == Outcome::kTieIncorrect; }

/// Scores chosen and rejected under the record's context. A gap of at most
/// `tie_epsilon` is a tie, settled by a fair coin that depends only on the
/// run seed, the prompt and the unordered completion pair. Scorer exceptions
/// are rethrown as kScorerFailure naming the record id.
Outcome compare(const Scorer& scorer, const dataset::PreferenceRecord& record,
                std::uint64_t rng_seed, double tie_epsilon = 0.0);

enum class IntervalKind { kWald, kWilson };

/// 95% normal-approximation interval p +- 1.96 sqrt(p (1 - p) / n), clipped
/// to [0, 1]. Throws kInvalidArgument unless 0 <= successes <= n and n > 0.
std::pair<double, double> wald_interval(std::size_t successes, std::size_t n);
/// 95% Wilson score interval.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n);

/// softmax(logits) . score_values, computed with the max logit subtracted.
double expected_score_from_logits(std::span<const double> logits,
                                  std::span<const double> score_values);

struct SubsetStats {
  std::size_t n = 0;
  std::size_t agree = 0;
  double agreement = 0.0;
};

enum class Protocol { kNc, kCtx, kNonsense, kNegative };
/// Which agreement is best for a protocol.
enum class Target { kMaximize, kHalf, kMinimize };

std::string_view to_string(Protocol protocol);
std::optional<Protocol> protocol_from_string(std::string_view text);
std::string_view to_string(Target target);
Target target_of(Protocol protocol);

struct AgreementReport {
  std::string scorer;
  std::size_t n = 0;
  std::size_t agree = 0;
  std::size_t ties_randomized = 0;
  double agreement = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  IntervalKind interval = IntervalKind::kWald;
  std::map<std::string, SubsetStats> per_subset;
  std::optional<Protocol> protocol;
  std::optional<Target> target;
  /// Per-record outcomes in input order.
  std::vector<Outcome> outcomes;
};

struct EvalOptions {
  double tie_epsilon = 0.0;
  std::size_t workers = 1;
  IntervalKind interval = IntervalKind::kWald;
};

/// Compares every record and aggregates in input order, so the report does
/// not depend on `workers`. Throws kInvalidArgument for empty input.
AgreementReport evaluate(const Scorer& scorer, std::span<const dataset::PreferenceRecord> records,
                         std::uint64_t rng_seed, const EvalOptions& options = {});

/// Context transformation of a protocol: nc drops contexts, ctx requires
/// them (kMalformedRecord otherwise), nonsense and negative overwrite them.
std::vector<dataset::PreferenceRecord> apply_protocol(
    std::span<const dataset::PreferenceRecord> records, Protocol protocol);

AgreementReport run_protocol(const Scorer& scorer,
                             std::span<const dataset::PreferenceRecord> records, Protocol protocol,
                             std::uint64_t rng_seed, const EvalOptions& options = {});

nlohmann::ordered_json report_to_json(const AgreementReport& report);
/// Human-readable summary with three-decimal agreement and interval.
std::string format_report(const AgreementReport& report);
/// One JSON line per record: id, outcome.
std::string outcomes_to_jsonl(std::span<const dataset::PreferenceRecord> records,
                              std::span<const Outcome> outcomes);

}  // namespace ctxpref::eval
