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
#include <vector>

#include "ctxpref/bound.hpp"
#include "ctxpref/error.hpp"
#include "ctxpref/rng.hpp"
#include "ctxpref/simulate.hpp"

using namespace ctxpref;

namespace {

std::vector<double> random_distribution(Philox& rng, std::size_t n) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) total += v = -std::log1p(-uniform01(rng));
  for (auto& v : p) v /= total;
  return p;
}

std::vector<double> random_deltas(Philox& rng, std::size_t n) {
  std::vector<double> d(n);
  for (auto& v : d) v = 20.0 * uniform01(rng) - 10.0;
  return d;
}

}  // namespace

TEST_CASE("general_bound examples") {
  SUBCASE("exact estimator") {
    const std::vector<double> p{0.3, 0.7}, d{1.0, -2.0};
    const auto r = bound::general_bound(p, p, d, d);
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.holds);
  }
  SUBCASE("hand arithmetic") {
    // lhs |0.7*2 - 0.3*1 - (0.4*1.5 - 0.6*0.5)| = |1.1 - 0.3|
    // prediction 0.7*0.5 + 0.3*0.5, inference 1.5*0.3 + 0.5*0.3
    const auto r = bound::general_bound(std::vector{0.7, 0.3}, std::vector{0.4, 0.6},
                                        std::vector{2.0, -1.0}, std::vector{1.5, -0.5});
    CHECK(r.lhs == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.prediction_term == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.inference_term == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(r.holds);
  }
  SUBCASE("single context") {
    const auto r = bound::general_bound(std::vector{1.0}, std::vector{1.0}, std::vector{3.0},
                                        std::vector{1.25});
    CHECK(r.lhs == r.prediction_term);
    CHECK(r.inference_term == 0.0);
  }
  SUBCASE("errors") {
    const std::vector<double> two{0.5, 0.5}, three{0.2, 0.3, 0.5}, bad{0.5, 0.6};
    CHECK_THROWS_AS(bound::general_bound(two, three, two, two), Error);
    CHECK_THROWS_AS(bound::general_bound(two, two, two, three), Error);
    try {
      bound::general_bound(bad, two, two, two);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidDistribution);
    }
  }
}

TEST_CASE("specific_bound examples") {
  const auto same = bound::specific_bound(1.0, 0.25, 0.25);
  CHECK(same.inference_term == 0.0);
  CHECK(same.rhs == same.prediction_term);

  const auto collinear = bound::specific_bound(2.0, 1.5, -0.5);
  CHECK(collinear.lhs == doctest::Approx(2.5));
  CHECK(collinear.prediction_term == doctest::Approx(0.5));
  CHECK(collinear.inference_term == doctest::Approx(2.0));
  CHECK(collinear.rhs == doctest::Approx(2.5));
  CHECK(collinear.holds);
  CHECK(collinear.slack() == doctest::Approx(0.0));

  const auto zero = bound::specific_bound(0.0, 0.0, 0.0);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
}

TEST_CASE("general bound holds on random instances") {
  Philox rng(101);
  for (int k = 0; k < 20'000; ++k) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    const auto p = random_distribution(rng, n);
    const auto q = random_distribution(rng, n);
    const auto d = random_deltas(rng, n);
    const auto e = random_deltas(rng, n);
    const auto r = bound::general_bound(p, q, d, e);
    REQUIRE(r.holds);
    REQUIRE(r.lhs >= 0.0);
    REQUIRE(r.prediction_term >= 0.0);
    REQUIRE(r.inference_term >= 0.0);
    REQUIRE(std::abs(r.rhs - (r.prediction_term + r.inference_term)) < 1e-12);
  }
}

TEST_CASE("specific bound: triangle inequality, equality when collinear") {
  Philox rng(202);
  for (int k = 0; k < 20'000; ++k) {
    const double a = 20.0 * uniform01(rng) - 10.0;
    const double b = 20.0 * uniform01(rng) - 10.0;
    const double c = 20.0 * uniform01(rng) - 10.0;
    REQUIRE(bound::specific_bound(a, b, c).holds);
    // Monotone on a line: a <= b <= c.
    double s[3] = {a, b, c};
    std::sort(s, s + 3);
    const auto ordered = bound::specific_bound(s[0], s[1], s[2]);
    REQUIRE(std::abs(ordered.slack()) < 1e-12);
  }
}

TEST_CASE("point-mass distributions: general and specific bounds share lhs and prediction") {
  Philox rng(303);
  for (int k = 0; k < 2000; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 6);
    const std::size_t c = uniform_index(rng, n);
    const std::size_t chat = uniform_index(rng, n);
    std::vector<double> p(n, 0.0), q(n, 0.0);
    p[c] = 1.0;
    q[chat] = 1.0;
    const auto d = random_deltas(rng, n);
    const auto e = random_deltas(rng, n);
    const auto g = bound::general_bound(p, q, d, e);
    const auto s = bound::specific_bound(d[c], e[c], e[chat]);
    REQUIRE(std::abs(g.lhs - s.lhs) < 1e-12);
    REQUIRE(std::abs(g.prediction_term - s.prediction_term) < 1e-12);
    // The general inference term weighs |est delta| at both contexts, so it
    // dominates |est(c) - est(c-hat)| and matches it when c-hat = c.
    REQUIRE(g.inference_term >= s.inference_term - 1e-12);
    if (c == chat) REQUIRE(std::abs(g.inference_term - s.inference_term) < 1e-12);
  }
}

TEST_CASE("monte carlo verification") {
  const auto world = simulate::random_world({.intents = 8, .prompts = 6, .contexts = 4}, 17);
  SUBCASE("truth estimator has zero lhs and zero slack") {
    const auto s = bound::verify_bounds_monte_carlo(world, bound::truth_estimator(world), 5000, 1);
    CHECK(s.violations == 0);
    CHECK(std::abs(s.max_slack) < 1e-9);
    CHECK(s.max_lhs < 1e-9);
  }
  SUBCASE("perturbed estimator") {
    const auto est = bound::perturbed_estimator(world, 0.7, 0.3, 5);
    const auto s = bound::verify_bounds_monte_carlo(world, est, 10'000, 2, 4);
    CHECK(s.violations == 0);
    CHECK(s.min_slack >= -1e-9);
    CHECK(s.max_slack > 0.0);
    std::size_t total = 0;
    for (auto h : s.histogram) total += h;
    CHECK(total == s.queries);
  }
  SUBCASE("independent of the worker count") {
    const auto est = bound::perturbed_estimator(world, 0.4, 0.5, 6);
    const auto one = bound::verify_bounds_monte_carlo(world, est, 3000, 9, 1);
    const auto many = bound::verify_bounds_monte_carlo(world, est, 3000, 9, 8);
    CHECK(one.max_slack == many.max_slack);
    CHECK(one.min_slack == many.min_slack);
    CHECK(one.histogram == many.histogram);
  }
  SUBCASE("estimator without posterior rows") {
    auto est = bound::truth_estimator(world);
    est.context_posterior.clear();
    CHECK_THROWS_AS(bound::verify_bounds_monte_carlo(world, est, 10, 1), Error);
  }
}
