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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctxpref::fit {

enum class EstimatorKind { kTabularNoContext, kTabularContextAware, kExternalScorer };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view text);

/// One tabular parameter: u-hat(prompt, [context,] completion). An empty
/// context means "no context".
struct CellKey {
  std::string prompt;
  std::string context;
  std::string completion;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

/// Fitted or plugged-in utility estimator ("reward model") with an optional
/// context posterior p-hat(z|x). Only differences of values are meaningful.
struct Estimator {
  EstimatorKind kind = EstimatorKind::kTabularNoContext;
  std::map<CellKey, double> values;
  /// Column labels of every context_posterior row.
  std::vector<std::string> contexts;
  std::map<std::string, std::vector<double>> context_posterior;

  bool context_aware() const noexcept { return kind == EstimatorKind::kTabularContextAware; }

  /// Table key for a lookup; no-context estimators drop the context.
  CellKey key(std::string_view prompt, std::optional<std::string_view> context,
              std::string_view completion) const;

  /// Strict lookup, throws kUnresolvedId for a missing cell.
  double value(std::string_view prompt, std::optional<std::string_view> context,
               std::string_view completion) const;

  /// Scoring lookup. Cells never seen in training score 0 (the regularized
  /// optimum for an unconstrained parameter). A context-aware estimator
  /// queried without a context combines its per-context values through
  /// p-hat(z|x) when a posterior row exists.
  double score(std::string_view prompt, std::optional<std::string_view> context,
               std::string_view completion) const;

  /// u-hat(x, y) = sum_z p-hat(z|x) u-hat((x,z), y). Throws kUnresolvedId when
  /// the prompt has no posterior row.
  double prompt_value(std::string_view prompt, std::string_view completion) const;

  /// Throws on non-finite values or posterior rows that are not distributions.
  void validate() const;
};

struct PreferenceDatum {
  std::string prompt;
  std::string winner;
  std::string loser;
  std::optional<std::string> context;
};

/// -sum log sigma(u-hat(winner) - u-hat(loser)). Context-conditioned cells are
/// used when the datum has a context and the estimator is context-aware.
double bt_negative_log_likelihood(const Estimator& estimator,
                                  std::span<const PreferenceDatum> data);

/// Bradley-Terry negative log-likelihood plus l2 * ||theta||^2 over a fixed
/// list of tabular cells. The objective is strictly convex for l2 > 0.
class BtObjective {
 public:
  /// Parameters are `cells` (sorted, unique); every datum must resolve
  /// against them or kUnresolvedId is thrown.
  BtObjective(std::vector<CellKey> cells, std::span<const PreferenceDatum> data,
              bool context_aware, double l2_strength);

  /// Sorted unique cells referenced by `data`.
  static std::vector<CellKey> cells_for(std::span<const PreferenceDatum> data,
                                        bool context_aware);

  const std::vector<CellKey>& cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  double l2_strength() const noexcept { return l2_; }

  double value(std::span<const double> theta) const;
  void gradient(std::span<const double> theta, std::span<double> grad) const;

  /// (winner index, loser index) per datum, in input order.
  const std::vector<std::pair<std::size_t, std::size_t>>& comparisons() const noexcept {
    return pairs_;
  }

 private:
  std::vector<CellKey> cells_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  double l2_;
};

struct FitOptions {
  bool context_aware = false;
  double l2_strength = 1e-4;
  double tolerance = 1e-6;
  std::size_t max_iters = 10'000;
};

struct FitResult {
  Estimator estimator;
  /// Largest iteration count over independent comparison-graph components.
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

/// Regularized Bradley-Terry MLE by descent with Armijo backtracking, run
/// separately on each connected component of the comparison graph (the
/// objective separates across them). Components of up to 256 cells step along
/// the Newton direction; larger ones take Barzilai-Borwein gradient steps
/// under a non-monotone acceptance test.
/// Throws kNonConvergence, naming the final gradient norm, when any component
/// exhausts max_iters.
FitResult fit_tabular(std::span<const PreferenceDatum> data, const FitOptions& options = {});

/// Smoothed empirical context frequencies per prompt. Prompts with no
/// observations and zero smoothing get the uniform distribution.
std::map<std::string, std::vector<double>> fit_context_posterior(
    std::span<const PreferenceDatum> data, std::span<const std::string> prompts,
    std::span<const std::string> contexts, double smoothing);

/// Max relative error between the analytic gradient of the objective at the
/// estimator's values and central finite differences with step `epsilon`.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
double gradient_check(const Estimator& estimator, std::span<const PreferenceDatum> data,
                      double epsilon, double l2_strength = 1e-4);

void save_estimator(const std::string& path, const Estimator& estimator);
Estimator load_estimator(const std::string& path);
std::string estimator_to_json(const Estimator& estimator);
Estimator estimator_from_json(std::string_view text);

}  // namespace ctxpref::fit
