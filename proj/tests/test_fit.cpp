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

#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "ctxpref/error.hpp"
#include "ctxpref/eval.hpp"
#include "ctxpref/fit.hpp"
#include "ctxpref/rng.hpp"
#include "ctxpref/simulate.hpp"
#include "test_support.hpp"

using namespace ctxpref;
using fit::CellKey;
using fit::PreferenceDatum;

namespace {

// -log sigma(d) written out directly, plus the ridge term.
double reference_objective(const std::vector<CellKey>& cells, std::span<const double> theta,
                           std::span<const PreferenceDatum> data, bool context_aware, double l2) {
  std::map<CellKey, double> value;
  for (std::size_t k = 0; k < cells.size(); ++k) value[cells[k]] = theta[k];
  double total = 0.0;
  for (const auto& d : data) {
    const std::string z = context_aware && d.context ? *d.context : std::string();
    const double gap = value.at({d.prompt, z, d.winner}) - value.at({d.prompt, z, d.loser});
    total += std::log1p(std::exp(-gap));
  }
  for (double t : theta) total += l2 * t * t;
  return total;
}

std::vector<PreferenceDatum> synthetic_data(Philox& rng, std::size_t n, bool with_context) {
  const char* prompts[] = {"p", "q"};
  const char* completions[] = {"a", "b", "c", "d"};
  const char* contexts[] = {"z1", "z2", "z3"};
  std::vector<PreferenceDatum> out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto w = uniform_index(rng, 4);
    auto l = uniform_index(rng, 3);
    if (l >= w) ++l;
    PreferenceDatum d{prompts[uniform_index(rng, 2)], completions[w], completions[l], std::nullopt};
    if (with_context) d.context = contexts[uniform_index(rng, 3)];
    out.push_back(d);
  }
  return out;
}

double fitted_gap(const fit::Estimator& est) {
  return est.value("x0", std::nullopt, "a") - est.value("x0", std::nullopt, "b");
}

}  // namespace

TEST_CASE("analytic gradient matches finite differences") {
  Philox rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const bool context_aware = trial % 2 == 1;
    const auto data = synthetic_data(rng, 40, context_aware);
    const auto cells = fit::BtObjective::cells_for(data, context_aware);
    const double l2 = 1e-3;
    const fit::BtObjective objective(cells, data, context_aware, l2);
    std::vector<double> theta(cells.size());
    for (auto& t : theta) t = 4.0 * uniform01(rng) - 2.0;

    CHECK(objective.value(theta) ==
          doctest::Approx(reference_objective(cells, theta, data, context_aware, l2)).epsilon(1e-12));

    std::vector<double> grad(theta.size());
    objective.gradient(theta, grad);
    const double h = 1e-5;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      auto up = theta, down = theta;
      up[k] += h;
      down[k] -= h;
      const double numeric = (reference_objective(cells, up, data, context_aware, l2) -
                              reference_objective(cells, down, data, context_aware, l2)) /
                             (2 * h);
      const double scale = std::max({std::abs(grad[k]), std::abs(numeric), 1e-6});
      CHECK(std::abs(grad[k] - numeric) / scale < 1e-4);
    }

    fit::Estimator est;
    est.kind = context_aware ? fit::EstimatorKind::kTabularContextAware
                             : fit::EstimatorKind::kTabularNoContext;
    for (std::size_t k = 0; k < cells.size(); ++k) est.values[cells[k]] = theta[k];
    CHECK(fit::gradient_check(est, data, 1e-5, l2) < 1e-4);
  }
}

TEST_CASE("gradient examples") {
  SUBCASE("single comparison") {
    const std::vector<PreferenceDatum> data{{"p", "a", "b", std::nullopt}};
    const auto cells = fit::BtObjective::cells_for(data, false);
    REQUIRE(cells.size() == 2);
    const fit::BtObjective objective(cells, data, false, 0.0 + 1e-12);
    const std::vector<double> theta{0.8, -0.3};  // cells sorted: a, b
    std::vector<double> grad(2);
    objective.gradient(theta, grad);
    const double s = 1.0 / (1.0 + std::exp(-(0.8 + 0.3)));
    CHECK(grad[0] == doctest::Approx(s - 1.0).epsilon(1e-9));
    CHECK(grad[1] == doctest::Approx(1.0 - s).epsilon(1e-9));
  }
  SUBCASE("no data leaves only the ridge term") {
    const std::vector<CellKey> cells{{"p", "", "a"}, {"p", "", "b"}};
    const fit::BtObjective objective(cells, {}, false, 0.25);
    std::vector<double> grad(2);
    objective.gradient(std::vector{1.0, -2.0}, grad);
    CHECK(grad[0] == doctest::Approx(0.5));
    CHECK(grad[1] == doctest::Approx(-1.0));
    fit::Estimator est;
    est.values[cells[0]] = 1.0;
    est.values[cells[1]] = -2.0;
    CHECK(fit::gradient_check(est, {}, 1e-5, 0.25) < 1e-4);
  }
  SUBCASE("epsilon range") {
    CHECK_THROWS_AS(fit::gradient_check({}, {}, 0.0), Error);
    CHECK_THROWS_AS(fit::gradient_check({}, {}, 0.1), Error);
  }
}

TEST_CASE("objective is convex along random segments") {
  Philox rng(11);
  const auto data = synthetic_data(rng, 60, true);
  const auto cells = fit::BtObjective::cells_for(data, true);
  const fit::BtObjective objective(cells, data, true, 1e-4);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> a(cells.size()), b(cells.size()), mid(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      a[j] = 10.0 * uniform01(rng) - 5.0;
      b[j] = 10.0 * uniform01(rng) - 5.0;
      mid[j] = 0.5 * (a[j] + b[j]);
    }
    CHECK(objective.value(mid) <= 0.5 * (objective.value(a) + objective.value(b)) + 1e-9);
  }
}

TEST_CASE("maximum likelihood recovers the generating gap") {
  const auto world = simulate::two_completion_world(1.0);
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto records = simulate::sample_unconditioned_preferences(world, 5000, seed);
    const auto data = simulate::to_data(records, false);
    const auto result = fit::fit_tabular(data, {.l2_strength = 1e-6});
    CHECK(result.gradient_norm < 1e-6);
    if (std::abs(fitted_gap(result.estimator) - 1.0) <= 0.15) ++passes;
  }
  CHECK(passes >= 9);
}

TEST_CASE("fit_tabular") {
  SUBCASE("a completion that always wins stays finite") {
    std::vector<PreferenceDatum> data(200, {"p", "w", "l", std::nullopt});
    const auto result = fit::fit_tabular(data);
    const double w = result.estimator.value("p", std::nullopt, "w");
    CHECK(std::isfinite(w));
    CHECK(w > 0.0);
    CHECK(w < 20.0);
    CHECK(result.estimator.value("p", std::nullopt, "l") == doctest::Approx(-w));
  }
  SUBCASE("the optimum does not depend on data order") {
    Philox rng(3);
    auto data = synthetic_data(rng, 300, true);
    const auto first = fit::fit_tabular(data, {.context_aware = true, .tolerance = 1e-10});
    std::reverse(data.begin(), data.end());
    const auto second = fit::fit_tabular(data, {.context_aware = true, .tolerance = 1e-10});
    for (const auto& [cell, v] : first.estimator.values) {
      CHECK(second.estimator.values.at(cell) == doctest::Approx(v).epsilon(1e-7));
    }
  }
  SUBCASE("large components take the first-order path") {
    std::vector<PreferenceDatum> data;
    Philox rng(4);
    for (int k = 0; k < 4000; ++k) {
      const auto a = uniform_index(rng, 400);
      auto b = uniform_index(rng, 399);
      if (b >= a) ++b;
      data.push_back({"p", "c" + std::to_string(a), "c" + std::to_string(b), std::nullopt});
    }
    const auto result = fit::fit_tabular(data);
    CHECK(result.estimator.values.size() == 400);
    CHECK(result.gradient_norm < 1e-6);
  }
  SUBCASE("errors") {
    const std::vector<PreferenceDatum> data{{"p", "a", "b", std::nullopt},
                                            {"p", "b", "a", std::nullopt}};
    CHECK_THROWS_AS(fit::fit_tabular({}), Error);
    CHECK_THROWS_AS(fit::fit_tabular(data, {.l2_strength = 0.0}), Error);
    Philox rng(9);
    const auto many = synthetic_data(rng, 200, false);
    try {
      fit::fit_tabular(many, {.tolerance = 1e-15, .max_iters = 1});
      FAIL("expected non-convergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNonConvergence);
      CHECK(std::string(e.what()).find("gradient") != std::string::npos);
    }
  }
}

TEST_CASE("context-aware fit separates reversed preferences") {
  const auto world = simulate::reversal_world({.prompts = 60}, 21);
  const auto train = simulate::sample_preferences(world, 3000, 22);
  const auto test = dataset::expand_pairs(simulate::reversal_pairs(world));
  const auto ctx = simulate::fit_records(world, train, {.context_aware = true});
  const auto nc = simulate::fit_records(world, train, {.context_aware = false});
  const eval::EstimatorScorer ctx_scorer(ctx.estimator), nc_scorer(nc.estimator);
  CHECK(eval::run_protocol(ctx_scorer, test, eval::Protocol::kCtx, 1).agreement > 0.95);
  CHECK(eval::run_protocol(nc_scorer, test, eval::Protocol::kNc, 1).agreement == 0.5);
}

TEST_CASE("more data helps") {
  const auto world = simulate::random_world(
      {.intents = 10, .prompts = 8, .contexts = 3, .max_completions = 4, .utility_scale = 2.0}, 31);
  const auto gold = simulate::gold_records(world);
  std::vector<double> means;
  for (const std::size_t n : {50, 500, 5000}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto train = simulate::sample_preferences(world, n, derive_seed(seed, n));
      const auto fitted = simulate::fit_records(world, train, {.context_aware = true});
      const eval::EstimatorScorer scorer(fitted.estimator);
      total += eval::run_protocol(scorer, gold, eval::Protocol::kCtx, seed).agreement;
    }
    means.push_back(total / 10.0);
  }
  CHECK(means[1] >= means[0] - 0.01);
  CHECK(means[2] >= means[1] - 0.01);
  CHECK(means[2] > means[0]);
}

TEST_CASE("context posterior") {
  const std::vector<std::string> prompts{"p", "q", "r"}, contexts{"z1", "z2", "z3"};
  const std::vector<PreferenceDatum> data{{"p", "a", "b", "z2"}, {"p", "b", "a", "z2"},
                                          {"q", "a", "b", "z1"}, {"q", "a", "b", "z1"},
                                          {"q", "a", "b", "z3"}, {"q", "a", "b", "z3"}};
  const auto sharp = fit::fit_context_posterior(data, prompts, contexts, 0.0);
  CHECK(sharp.at("p") == std::vector<double>{0.0, 1.0, 0.0});
  for (double v : sharp.at("r")) CHECK(v == doctest::Approx(1.0 / 3.0));
  const auto smooth = fit::fit_context_posterior(data, prompts, contexts, 1.0);
  CHECK(smooth.at("q")[0] == doctest::Approx(smooth.at("q")[2]));
  CHECK(smooth.at("q")[0] == doctest::Approx(3.0 / 7.0));
  for (double v : smooth.at("r")) CHECK(v == doctest::Approx(1.0 / 3.0));

  const std::vector<std::string> two{"z1", "z2"};
  const std::vector<PreferenceDatum> balanced{{"p", "a", "b", "z1"}, {"p", "a", "b", "z1"},
                                              {"p", "a", "b", "z2"}, {"p", "a", "b", "z2"}};
  CHECK(fit::fit_context_posterior(balanced, std::vector<std::string>{"p"}, two, 1.0).at("p") ==
        std::vector<double>{0.5, 0.5});
}

TEST_CASE("prompt value combines context tables through the posterior") {
  Philox rng(41);
  const auto data = synthetic_data(rng, 400, true);
  const std::vector<std::string> prompts{"p", "q"}, contexts{"z1", "z2", "z3"};
  auto est = fit::fit_tabular(data, {.context_aware = true}).estimator;
  est.contexts = contexts;
  est.context_posterior = fit::fit_context_posterior(data, prompts, contexts, 0.5);
  for (const auto& x : prompts) {
    for (const auto* y : {"a", "b", "c", "d"}) {
      double expected = 0.0;
      for (std::size_t z = 0; z < contexts.size(); ++z) {
        expected += est.context_posterior.at(x)[z] * est.value(x, contexts[z], y);
      }
      CHECK(std::abs(est.prompt_value(x, y) - expected) < 1e-12);
      CHECK(est.score(x, std::nullopt, y) == est.prompt_value(x, y));
    }
  }
  CHECK_THROWS_AS(est.prompt_value("unknown", "a"), Error);
  CHECK(est.score("p", "z1", "unseen") == 0.0);
  CHECK_THROWS_AS(est.value("p", "z1", "unseen"), Error);
}

TEST_CASE("estimator files round trip") {
  Philox rng(51);
  const auto data = synthetic_data(rng, 100, true);
  auto est = fit::fit_tabular(data, {.context_aware = true}).estimator;
  est.contexts = {"z1", "z2", "z3"};
  est.context_posterior = fit::fit_context_posterior(data, std::vector<std::string>{"p", "q"},
                                                     est.contexts, 1.0);
  const testing::TempDir dir;
  const auto path = dir.file("est.json");
  fit::save_estimator(path, est);
  const auto back = fit::load_estimator(path);
  CHECK(back.kind == est.kind);
  CHECK(back.values == est.values);
  CHECK(back.contexts == est.contexts);
  CHECK(back.context_posterior == est.context_posterior);
  CHECK(fit::estimator_to_json(back) == fit::estimator_to_json(est));
  CHECK_THROWS_AS(fit::estimator_from_json("{\"kind\": \"nope\"}"), Error);
  CHECK_THROWS_AS(fit::load_estimator(dir.file("missing.json")), Error);
}
