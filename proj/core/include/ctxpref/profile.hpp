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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctxpref/dataset.hpp"
#include "ctxpref/eval.hpp"
#include "ctxpref/world.hpp"

namespace ctxpref::profile {

/// Produces a profile (a context string) from a user's expressed preferences.
class ProfileInferrer {
 public:
  virtual ~ProfileInferrer() = default;
  virtual std::string infer(std::span<const dataset::PreferenceRecord> samples) const = 0;
};

/// Picks the library context under which the observed preferences are most
/// likely according to the world's context-conditioned Bradley-Terry model.
/// Ties, including the empty sample, go to the lowest library index.
class BayesProfileInferrer final : public ProfileInferrer {
 public:
  /// Throws kInvalidArgument for an empty library and kUnresolvedId when a
  /// library entry is not a context of the world.
  BayesProfileInferrer(std::vector<std::string> library, std::shared_ptr<const World> world);

  std::string infer(std::span<const dataset::PreferenceRecord> samples) const override;
  std::size_t infer_index(std::span<const dataset::PreferenceRecord> samples) const;
  /// Log-likelihood of the samples under each library entry.
  std::vector<double> log_likelihoods(std::span<const dataset::PreferenceRecord> samples) const;

 private:
  std::vector<std::string> library_;
  std::vector<ContextId> contexts_;
  std::shared_ptr<const World> world_;
};

/// Relabels each record by the backend's scores under `profile`: chosen is the
/// higher-scored completion, exact ties go to a coin keyed like eval::compare.
/// The records keep their prompt and gain `profile` as context. Backend
/// exceptions become kBackendFailure.
std::vector<dataset::PreferenceRecord> label_with_profile(
    const eval::Scorer& backend, std::span<const dataset::PreferenceRecord> records,
    const std::string& profile, std::uint64_t rng_seed);

struct CurvePoint {
  double mean = 0.0;
  /// Sample standard deviation across seeds (n - 1 denominator; 0 for one seed).
  double std_dev = 0.0;
  /// std_dev for a single profile; mean of per-profile std_dev / sqrt(profiles)
  /// for a combined curve.
  double std_error = 0.0;
};

struct ProfileRun {
  std::string profile_text;
  std::vector<std::size_t> n_grid{2, 8, 32};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::map<std::size_t, CurvePoint> curve;
  /// Agreement with the true profile attached, and with no context.
  double ground_truth = 0.0;
  double no_context = 0.0;
  /// Agreement per (seed, n) in seed-major order.
  std::vector<double> cells;
};

/// Throws kInvalidArgument unless n_grid is strictly increasing and positive
/// and there is at least one seed.
void validate(const ProfileRun& run);

/// For every seed, shuffles the pool with Philox(seed) and keeps the first
/// max(n_grid) samples; for every n the profile inferred from the first n of
/// them conditions the scorer, which is evaluated against labeled_test.
/// Throws kInsufficientPool when the pool is smaller than max(n_grid).
ProfileRun inference_curve(const ProfileInferrer& inferrer, const eval::Scorer& scorer,
                           std::span<const dataset::PreferenceRecord> labeled_test,
                           std::span<const dataset::PreferenceRecord> labeled_train_pool,
                           ProfileRun run, std::size_t workers = 1);

/// Mean of the per-profile curves; std_error is the mean per-profile std_dev
/// divided by sqrt(number of profiles).
struct CombinedCurve {
  std::map<std::size_t, CurvePoint> curve;
  double ground_truth = 0.0;
  double no_context = 0.0;
};

CombinedCurve combine(std::span<const ProfileRun> runs);

/// The error rule on its own: mean(std_devs) / sqrt(std_devs.size()).
double combined_error(std::span<const double> per_profile_std_devs);

/// Simulator for persistent-profile experiments. Each prompt has two
/// completions and a base preference sign; profile k agrees with the base
/// sign with probability `agreement_with_base[k]` and is weighted by
/// `profile_weights[k]` in the population.
struct StudyOptions {
  std::size_t train_prompts = 100;
  std::size_t test_prompts = 100;
  std::vector<double> profile_weights{0.35, 0.3, 0.2, 0.1, 0.05};
  std::vector<double> agreement_with_base{0.9, 0.8, 0.7, 0.2, 0.3};
  double margin_low = 1.0;
  double margin_high = 3.0;
  std::size_t scorer_train_samples = 20'000;
  std::size_t pool_size = 200;
  std::vector<std::size_t> n_grid{2, 8, 32};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t workers = 1;
};

/// Profile names are P1, P2, ...; train prompts come first in the world.
World profile_world(const StudyOptions& options, std::uint64_t seed);

struct StudyResult {
  std::vector<ProfileRun> runs;
  CombinedCurve combined;
  /// Label-disagreement fraction between every pair of profiles on the test set.
  std::vector<std::vector<double>> label_distance;
};

/// Builds the world, fits a context-aware tabular scorer on sampled
/// preferences over all prompts, labels the test prompts under each profile,
/// samples each profile's training pool, and runs the Bayes-inferrer curve.
StudyResult run_simulated_study(const StudyOptions& options, std::uint64_t seed);

struct LabeledStudyInput {
  /// Profile texts; each one labels the test set and the pool.
  std::vector<std::string> profiles;
  std::vector<dataset::PreferenceRecord> test;
  std::vector<dataset::PreferenceRecord> pool;
  std::vector<std::size_t> n_grid{2, 8, 32};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t workers = 1;
};

/// Study over arbitrary backends: `teacher` labels the test set and the pool
/// under every profile, then the curve is run with `inferrer` and `scorer`.
StudyResult run_labeled_study(const ProfileInferrer& inferrer, const eval::Scorer& teacher,
                              const eval::Scorer& scorer, const LabeledStudyInput& input,
                              std::uint64_t seed);

nlohmann::ordered_json study_to_json(const StudyResult& result);
/// Table with one row per profile plus a mean row: n columns, ground truth, NC.
std::string format_study(const StudyResult& result);
/// Plot-ready CSV: profile,n,mean,std_error (profile "mean" for the combined row).
std::string study_to_csv(const StudyResult& result);

}  // namespace ctxpref::profile
