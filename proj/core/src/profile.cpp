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

#include "ctxpref/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ctxpref/error.hpp"
#include "ctxpref/parallel.hpp"
#include "ctxpref/rng.hpp"
#include "ctxpref/simulate.hpp"

namespace ctxpref::profile {
namespace {

double log_sigmoid(double d) {
  return d >= 0.0 ? -std::log1p(std::exp(-d)) : d - std::log1p(std::exp(d));
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<dataset::PreferenceRecord> with_context(
    std::span<const dataset::PreferenceRecord> records, const std::optional<std::string>& context) {
  std::vector<dataset::PreferenceRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    r.context = context;
    r.context_source.reset();
  }
  return out;
}

}  // namespace

BayesProfileInferrer::BayesProfileInferrer(std::vector<std::string> library,
                                           std::shared_ptr<const World> world)
    : library_(std::move(library)), world_(std::move(world)) {
  if (library_.empty()) throw Error(ErrorCode::kInvalidArgument, "profile library is empty");
  for (const auto& name : library_) {
    const auto z = world_->find_context(name);
    if (!z) throw Error(ErrorCode::kUnresolvedId, fmt::format("unknown profile '{}'", name));
    contexts_.push_back(*z);
  }
}

std::vector<double> BayesProfileInferrer::log_likelihoods(
    std::span<const dataset::PreferenceRecord> samples) const {
  std::vector<double> ll(library_.size(), 0.0);
  for (const auto& s : samples) {
    const auto x = world_->find_prompt(s.prompt);
    const auto winner = world_->find_completion(s.chosen);
    const auto loser = world_->find_completion(s.rejected);
    if (!x || !winner || !loser) {
      throw Error(ErrorCode::kUnresolvedId, fmt::format("sample '{}' is not in the world", s.id));
    }
    const auto mass = context_posterior(*world_, *x);
    for (std::size_t k = 0; k < library_.size(); ++k) {
      if (!(mass[contexts_[k].value] > 0.0)) {
        ll[k] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const double d = contextual_utility(*world_, *x, contexts_[k], *winner) -
                       contextual_utility(*world_, *x, contexts_[k], *loser);
      ll[k] += log_sigmoid(d);
    }
  }
  return ll;
}

std::size_t BayesProfileInferrer::infer_index(
    std::span<const dataset::PreferenceRecord> samples) const {
  const auto ll = log_likelihoods(samples);
  std::size_t best = 0;
  for (std::size_t k = 1; k < ll.size(); ++k) {
    if (ll[k] > ll[best]) best = k;
  }
  return best;
}

std::string BayesProfileInferrer::infer(std::span<const dataset::PreferenceRecord> samples) const {
  return library_[infer_index(samples)];
}

std::vector<dataset::PreferenceRecord> label_with_profile(
    const eval::Scorer& backend, std::span<const dataset::PreferenceRecord> records,
    const std::string& profile, std::uint64_t rng_seed) {
  std::vector<dataset::PreferenceRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    double first = 0.0;
    double second = 0.0;
    try {
      first = backend.score(r.prompt, r.chosen, profile);
      second = backend.score(r.prompt, r.rejected, profile);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kBackendFailure,
                  fmt::format("labeling '{}' with {}: {}", r.id, backend.name(), e.what()));
    }
    bool keep = first > second;
    if (first == second) {
      keep = eval::tie_prefers_lower(rng_seed, r.prompt, r.chosen, r.rejected) ==
             (r.chosen < r.rejected);
    }
    if (!keep) std::swap(r.chosen, r.rejected);
    r.context = profile;
    r.context_source = dataset::ContextSource::kTeacher;
  }
  return out;
}

void validate(const ProfileRun& run) {
  if (run.n_grid.empty() || run.n_grid.front() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "n_grid must be nonempty and positive");
  }
  for (std::size_t k = 1; k < run.n_grid.size(); ++k) {
    if (run.n_grid[k] <= run.n_grid[k - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "n_grid must be strictly increasing");
    }
  }
  if (run.seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
}

ProfileRun inference_curve(const ProfileInferrer& inferrer, const eval::Scorer& scorer,
                           std::span<const dataset::PreferenceRecord> labeled_test,
                           std::span<const dataset::PreferenceRecord> labeled_train_pool,
                           ProfileRun run, std::size_t workers) {
  validate(run);
  const std::size_t largest = run.n_grid.back();
  if (labeled_train_pool.size() < largest) {
    throw Error(ErrorCode::kInsufficientPool,
                fmt::format("pool has {} samples, need {}", labeled_train_pool.size(), largest));
  }
  const std::size_t n_seeds = run.seeds.size();
  const std::size_t n_grid = run.n_grid.size();
  std::vector<std::vector<dataset::PreferenceRecord>> subsets(n_seeds);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    std::vector<std::size_t> order(labeled_train_pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Philox rng(run.seeds[s]);
    shuffle(rng, order);
    for (std::size_t k = 0; k < largest; ++k) subsets[s].push_back(labeled_train_pool[order[k]]);
  }

  run.cells.assign(n_seeds * n_grid, 0.0);
  parallel_for(n_seeds * n_grid, workers, [&](std::size_t cell) {
    const std::size_t s = cell / n_grid;
    const std::size_t g = cell % n_grid;
    const std::span<const dataset::PreferenceRecord> prefix(subsets[s].data(), run.n_grid[g]);
    const auto inferred = inferrer.infer(prefix);
    const auto test = with_context(labeled_test, inferred);
    run.cells[cell] = eval::evaluate(scorer, test, run.seeds[s]).agreement;
  });

  run.curve.clear();
  for (std::size_t g = 0; g < n_grid; ++g) {
    std::vector<double> column(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) column[s] = run.cells[s * n_grid + g];
    CurvePoint point;
    point.mean = mean_of(column);
    point.std_dev = sample_std(column);
    point.std_error = point.std_dev;
    run.curve[run.n_grid[g]] = point;
  }
  run.ground_truth =
      eval::evaluate(scorer, with_context(labeled_test, run.profile_text), run.seeds.front())
          .agreement;
  run.no_context =
      eval::evaluate(scorer, with_context(labeled_test, std::nullopt), run.seeds.front())
          .agreement;
  return run;
}

double combined_error(std::span<const double> per_profile_std_devs) {
  if (per_profile_std_devs.empty()) return 0.0;
  return mean_of(per_profile_std_devs) /
         std::sqrt(static_cast<double>(per_profile_std_devs.size()));
}

CombinedCurve combine(std::span<const ProfileRun> runs) {
  CombinedCurve combined;
  if (runs.empty()) return combined;
  for (const auto& [n, point] : runs.front().curve) {
    std::vector<double> means;
    std::vector<double> stds;
    for (const auto& run : runs) {
      const auto it = run.curve.find(n);
      if (it == run.curve.end()) {
        throw Error(ErrorCode::kInvalidArgument, "profile runs use different n grids");
      }
      means.push_back(it->second.mean);
      stds.push_back(it->second.std_dev);
    }
    CurvePoint c;
    c.mean = mean_of(means);
    c.std_dev = mean_of(stds);
    c.std_error = combined_error(stds);
    combined.curve[n] = c;
  }
  std::vector<double> truth;
  std::vector<double> blind;
  for (const auto& run : runs) {
    truth.push_back(run.ground_truth);
    blind.push_back(run.no_context);
  }
  combined.ground_truth = mean_of(truth);
  combined.no_context = mean_of(blind);
  return combined;
}

World profile_world(const StudyOptions& options, std::uint64_t seed) {
  const std::size_t n_profiles = options.profile_weights.size();
  if (n_profiles == 0 || options.agreement_with_base.size() != n_profiles) {
    throw Error(ErrorCode::kLengthMismatch,
                "profile_weights and agreement_with_base must be nonempty and equally long");
  }
  if (options.train_prompts == 0 || options.test_prompts == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need train and test prompts");
  }
  if (!(options.margin_low > 0.0) || !(options.margin_high >= options.margin_low)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < margin_low <= margin_high");
  }
  const std::size_t n_x = options.train_prompts + options.test_prompts;
  WorldSpec spec;
  for (std::size_t k = 0; k < n_profiles; ++k) spec.contexts.push_back(fmt::format("P{}", k + 1));
  spec.context_cells.resize(n_profiles);
  const std::size_t n_i = n_x * n_profiles;
  spec.prompt_given_intent = Table(n_i, n_x);
  spec.utility = Table(n_i, 2 * n_x);
  Philox rng(seed);
  for (std::size_t x = 0; x < n_x; ++x) {
    spec.prompts.push_back(fmt::format("q{}", x));
    spec.completions.push_back(fmt::format("q{}a", x));
    spec.completions.push_back(fmt::format("q{}b", x));
    spec.completion_prompt.push_back(x);
    spec.completion_prompt.push_back(x);
    const double base = uniform01(rng) < 0.5 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n_profiles; ++k) {
      const std::size_t i = x * n_profiles + k;
      const double sign = uniform01(rng) < options.agreement_with_base[k] ? base : -base;
      const double margin =
          options.margin_low + (options.margin_high - options.margin_low) * uniform01(rng);
      spec.intents.push_back(fmt::format("u{}_{}", x, k + 1));
      spec.context_cells[k].push_back(i);
      spec.intent_prior.push_back(options.profile_weights[k]);
      spec.prompt_given_intent(i, x) = 1.0;
      spec.utility(i, 2 * x) = sign * margin / 2.0;
      spec.utility(i, 2 * x + 1) = -sign * margin / 2.0;
    }
  }
  const double total = std::accumulate(spec.intent_prior.begin(), spec.intent_prior.end(), 0.0);
  for (auto& p : spec.intent_prior) p /= total;
  return World::create(std::move(spec));
}

namespace {

std::vector<std::vector<double>> label_distance(
    const std::vector<std::vector<dataset::PreferenceRecord>>& labels) {
  const std::size_t n = labels.size();
  std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      std::size_t differ = 0;
      for (std::size_t r = 0; r < labels[a].size(); ++r) {
        if (labels[a][r].chosen != labels[b][r].chosen) ++differ;
      }
      out[a][b] = labels[a].empty() ? 0.0
                                    : static_cast<double>(differ) /
                                          static_cast<double>(labels[a].size());
    }
  }
  return out;
}

}  // namespace

StudyResult run_simulated_study(const StudyOptions& options, std::uint64_t seed) {
  auto world = std::make_shared<const World>(profile_world(options, seed));
  const std::size_t n_profiles = world->num_contexts();

  const auto training = simulate::sample_preferences(*world, options.scorer_train_samples,
                                                     derive_seed(seed, 1));
  fit::FitOptions fit_options;
  fit_options.context_aware = true;
  const eval::EstimatorScorer scorer(simulate::fit_records(*world, training, fit_options).estimator);
  const eval::WorldScorer teacher(world);

  std::vector<dataset::PreferenceRecord> test;
  for (std::size_t x = options.train_prompts; x < world->num_prompts(); ++x) {
    dataset::PreferenceRecord r;
    r.id = fmt::format("test-{}", x);
    r.prompt = world->prompt_name(PromptId{x});
    r.chosen = world->completion_name(world->completions_of(PromptId{x})[0]);
    r.rejected = world->completion_name(world->completions_of(PromptId{x})[1]);
    test.push_back(std::move(r));
  }

  std::vector<std::string> library;
  for (std::size_t k = 0; k < n_profiles; ++k) library.push_back(world->context_name(ContextId{k}));
  const BayesProfileInferrer inferrer(library, world);

  StudyResult result;
  std::vector<std::vector<dataset::PreferenceRecord>> labels(n_profiles);
  for (std::size_t k = 0; k < n_profiles; ++k) {
    labels[k] = label_with_profile(teacher, test, library[k], derive_seed(seed, 2));

    std::vector<dataset::PreferenceRecord> pool(options.pool_size);
    const std::uint64_t pool_seed = derive_seed(seed, 100 + k);
    for (std::size_t j = 0; j < options.pool_size; ++j) {
      Philox rng(derive_seed(pool_seed, j));
      const PromptId x{uniform_index(rng, options.train_prompts)};
      const auto options_x = world->completions_of(x);
      const bool swap = uniform01(rng) < 0.5;
      PreferenceQuery query{x, options_x[swap ? 1 : 0], options_x[swap ? 0 : 1], ContextId{k}};
      const bool first = sample_preference(*world, query, rng()) == Choice::kFirst;
      auto& r = pool[j];
      r.id = fmt::format("pool-{}-{}", k + 1, j);
      r.prompt = world->prompt_name(x);
      r.chosen = world->completion_name(first ? query.first : query.second);
      r.rejected = world->completion_name(first ? query.second : query.first);
    }

    ProfileRun run;
    run.profile_text = library[k];
    run.n_grid = options.n_grid;
    run.seeds = options.seeds;
    result.runs.push_back(
        inference_curve(inferrer, scorer, labels[k], pool, std::move(run), options.workers));
  }
  result.combined = combine(result.runs);

  result.label_distance = label_distance(labels);
  return result;
}

StudyResult run_labeled_study(const ProfileInferrer& inferrer, const eval::Scorer& teacher,
                              const eval::Scorer& scorer, const LabeledStudyInput& input,
                              std::uint64_t seed) {
  if (input.profiles.empty()) throw Error(ErrorCode::kInvalidArgument, "no profiles given");
  if (input.test.empty()) throw Error(ErrorCode::kInvalidArgument, "test set is empty");
  StudyResult result;
  std::vector<std::vector<dataset::PreferenceRecord>> labels;
  for (std::size_t k = 0; k < input.profiles.size(); ++k) {
    const auto& profile = input.profiles[k];
    labels.push_back(label_with_profile(teacher, input.test, profile, derive_seed(seed, 2)));
    const auto pool = label_with_profile(teacher, input.pool, profile, derive_seed(seed, 3));
    ProfileRun run;
    run.profile_text = profile;
    run.n_grid = input.n_grid;
    run.seeds = input.seeds;
    result.runs.push_back(
        inference_curve(inferrer, scorer, labels.back(), pool, std::move(run), input.workers));
  }
  result.combined = combine(result.runs);
  result.label_distance = label_distance(labels);
  return result;
}

nlohmann::ordered_json study_to_json(const StudyResult& result) {
  const auto curve_json = [](const std::map<std::size_t, CurvePoint>& curve) {
    auto points = nlohmann::ordered_json::array();
    for (const auto& [n, p] : curve) {
      points.push_back({{"n", n}, {"mean", p.mean}, {"std_dev", p.std_dev},
                        {"std_error", p.std_error}});
    }
    return points;
  };
  nlohmann::ordered_json doc;
  auto profiles = nlohmann::ordered_json::array();
  for (const auto& run : result.runs) {
    nlohmann::ordered_json row;
    row["profile"] = run.profile_text;
    row["curve"] = curve_json(run.curve);
    row["ground_truth"] = run.ground_truth;
    row["no_context"] = run.no_context;
    profiles.push_back(std::move(row));
  }
  doc["profiles"] = std::move(profiles);
  doc["mean"] = {{"curve", curve_json(result.combined.curve)},
                 {"ground_truth", result.combined.ground_truth},
                 {"no_context", result.combined.no_context}};
  doc["label_distance"] = result.label_distance;
  return doc;
}

std::string format_study(const StudyResult& result) {
  std::string out = fmt::format("{:<8}", "profile");
  if (!result.runs.empty()) {
    for (const auto& [n, p] : result.runs.front().curve) out += fmt::format("  {:>13}", fmt::format("n={}", n));
  }
  out += fmt::format("  {:>12}  {:>6}\n", "ground-truth", "NC");
  for (const auto& run : result.runs) {
    out += fmt::format("{:<8}", run.profile_text);
    for (const auto& [n, p] : run.curve) {
      out += fmt::format("  {:>13}", fmt::format("{:.3f}+-{:.3f}", p.mean, p.std_error));
    }
    out += fmt::format("  {:>12.3f}  {:>6.3f}\n", run.ground_truth, run.no_context);
  }
  out += fmt::format("{:<8}", "mean");
  for (const auto& [n, p] : result.combined.curve) {
    out += fmt::format("  {:>13}", fmt::format("{:.3f}+-{:.3f}", p.mean, p.std_error));
  }
  out += fmt::format("  {:>12.3f}  {:>6.3f}\n", result.combined.ground_truth,
                     result.combined.no_context);
  return out;
}

std::string study_to_csv(const StudyResult& result) {
  std::string out = "profile,n,mean,std_error\n";
  for (const auto& run : result.runs) {
    for (const auto& [n, p] : run.curve) {
      out += fmt::format("{},{},{:.17g},{:.17g}\n", run.profile_text, n, p.mean, p.std_error);
    }
  }
  for (const auto& [n, p] : result.combined.curve) {
    out += fmt::format("mean,{},{:.17g},{:.17g}\n", n, p.mean, p.std_error);
  }
  return out;
}

}  // namespace ctxpref::profile
