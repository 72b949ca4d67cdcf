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

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ctxpref/error.hpp"
#include "ctxpref/rng.hpp"
#include "ctxpref/simulate.hpp"
#include "ctxpref/world.hpp"
#include "test_support.hpp"

using namespace ctxpref;
using testing::one_prompt_world;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no ctxpref::Error thrown");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("philox matches numpy") {
  // numpy.random.Philox(key=[seed, stream]).random_raw(k)
  Philox a(42);
  const std::array<std::uint64_t, 6> expected42{0xd1f8817d4d62880eULL, 0x307266b65cc8797eULL,
                                                0xde1f04e7f084ed03ULL, 0x65034a8e78cd1e59ULL,
                                                0x5e3daa8961c3e3d3ULL, 0x6f37dea4a04bd05cULL};
  for (auto v : expected42) CHECK(a() == v);
  Philox b(0);
  CHECK(b() == 0x02f4ba6408e4d89bULL);
  CHECK(b() == 0x3dd62b0b9ca8c5b2ULL);
  Philox c(7, 3);
  const std::array<std::uint64_t, 5> expected7{0x7b6cc7b1862cc5f2ULL, 0xb960f2ea4b3f8d9fULL,
                                               0x0cdd72e015deb1a6ULL, 0x50edb0d22a6a6fd5ULL,
                                               0xae45891bf7ab4df3ULL};
  for (auto v : expected7) CHECK(c() == v);
}

TEST_CASE("rng helpers") {
  SUBCASE("derive_seed separates indices") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 10'000; ++k) seen.insert(derive_seed(5, k));
    CHECK(seen.size() == 10'000);
    CHECK(derive_seed(5, 1) != derive_seed(6, 1));
  }
  SUBCASE("uniform01 in range") {
    Philox rng(1);
    double lo = 1.0, hi = 0.0, total = 0.0;
    for (int k = 0; k < 100'000; ++k) {
      const double u = uniform01(rng);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
      total += u;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(total / 100'000 == doctest::Approx(0.5).epsilon(0.01));
  }
  SUBCASE("uniform_index is uniform") {
    Philox rng(9);
    std::array<int, 7> counts{};
    const int n = 70'000;
    for (int k = 0; k < n; ++k) ++counts[uniform_index(rng, 7)];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
    // 6 degrees of freedom, 99.9th percentile 22.46
    CHECK(chi2 < 22.46);
  }
  SUBCASE("shuffle is a permutation") {
    std::vector<std::size_t> v(100);
    std::iota(v.begin(), v.end(), std::size_t{0});
    Philox rng(3);
    shuffle(rng, v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < 100; ++k) CHECK(sorted[k] == k);
    CHECK(v != sorted);
  }
  SUBCASE("standard normal moments") {
    Philox rng(4);
    double m = 0.0, s = 0.0;
    const int n = 200'000;
    for (int k = 0; k < n; ++k) {
      const double z = standard_normal(rng);
      m += z;
      s += z * z;
    }
    CHECK(std::abs(m / n) < 0.01);
    CHECK(s / n == doctest::Approx(1.0).epsilon(0.01));
  }
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("world construction checks invariants") {
  SUBCASE("prior off by more than the tolerance") {
    CHECK(code_of([] {
            one_prompt_world({0.5, 0.6}, {1, 1}, {{0, 1}}, {{0, 1}, {0, 1}});
          }) == ErrorCode::kInvalidDistribution);
  }
  SUBCASE("prior within tolerance is renormalized") {
    const auto w = one_prompt_world({0.5, 0.5 + 5e-10}, {1, 1}, {{0, 1}}, {{0, 1}, {0, 1}});
    CHECK(sum(w.spec().intent_prior) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("negative probability") {
    CHECK(code_of([] {
            one_prompt_world({1.5, -0.5}, {1, 1}, {{0, 1}}, {{0, 1}, {0, 1}});
          }) == ErrorCode::kInvalidDistribution);
  }
  SUBCASE("contexts must partition") {
    CHECK_THROWS_AS(one_prompt_world({0.5, 0.5}, {1, 1}, {{0}, {0, 1}}, {{0, 1}, {0, 1}}), Error);
    CHECK_THROWS_AS(one_prompt_world({0.5, 0.5}, {1, 1}, {{0}}, {{0, 1}, {0, 1}}), Error);
  }
  SUBCASE("non-finite utility") {
    CHECK_THROWS_AS(one_prompt_world({0.5, 0.5}, {1, 1}, {{0, 1}}, {{0, NAN}, {0, 1}}), Error);
  }
}

TEST_CASE("intent_posterior") {
  SUBCASE("support restriction gives a point mass") {
    const auto w = one_prompt_world({0.25, 0.25, 0.25, 0.25}, {0, 0, 0, 1}, {{0, 1, 2, 3}},
                                    {{0, 0}, {0, 0}, {0, 0}, {0, 0}});
    const auto p = intent_posterior(w, PromptId{0});
    CHECK(p[3] == 1.0);
    CHECK(p[0] == 0.0);
  }
  SUBCASE("equal likelihoods leave the prior") {
    const auto w = one_prompt_world({0.1, 0.3, 0.6}, {0.4, 0.4, 0.4}, {{0, 1, 2}},
                                    {{0, 0}, {0, 0}, {0, 0}});
    const auto p = intent_posterior(w, PromptId{0});
    CHECK(p[0] == doctest::Approx(0.1));
    CHECK(p[1] == doctest::Approx(0.3));
    CHECK(p[2] == doctest::Approx(0.6));
  }
  SUBCASE("hand Bayes") {
    // 0.5*0.2 / (0.5*0.2 + 0.5*0.8)
    const auto w = one_prompt_world({0.5, 0.5}, {0.2, 0.8}, {{0, 1}}, {{0, 0}, {0, 0}});
    const auto p = intent_posterior(w, PromptId{0});
    CHECK(p[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("zero marginal") {
    const auto w = one_prompt_world({0.5, 0.5}, {1, 1}, {{0, 1}}, {{0, 0}, {0, 0}});
    CHECK(code_of([&] { intent_posterior(w, PromptId{1}); }) == ErrorCode::kZeroMarginal);
    CHECK(code_of([&] { context_posterior(w, PromptId{1}); }) == ErrorCode::kZeroMarginal);
  }
}

TEST_CASE("context_posterior") {
  SUBCASE("single cell") {
    const auto w = one_prompt_world({0.2, 0.8}, {0.3, 0.9}, {{0, 1}}, {{0, 0}, {0, 0}});
    const auto p = context_posterior(w, PromptId{0});
    REQUIRE(p.size() == 1);
    CHECK(p[0] == doctest::Approx(1.0));
  }
  SUBCASE("additivity") {
    const auto w = one_prompt_world({0.2, 0.3, 0.5}, {1, 1, 1}, {{0, 1}, {2}},
                                    {{0, 0}, {0, 0}, {0, 0}});
    const auto p = context_posterior(w, PromptId{0});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
    const auto w2 = one_prompt_world({0.1, 0.1, 0.8}, {1, 1, 1}, {{0}, {1, 2}},
                                     {{0, 0}, {0, 0}, {0, 0}});
    const auto p2 = context_posterior(w2, PromptId{0});
    CHECK(p2[0] == doctest::Approx(0.1));
    CHECK(p2[1] == doctest::Approx(0.9));
  }
}

TEST_CASE("contextual and prompt utility") {
  SUBCASE("singleton cell") {
    const auto w = one_prompt_world({0.5, 0.5}, {1, 1}, {{0}, {1}}, {{2.5, 0}, {7, 0}});
    CHECK(contextual_utility(w, PromptId{0}, ContextId{0}, CompletionId{0}) == 2.5);
  }
  SUBCASE("midpoint") {
    const auto w = one_prompt_world({0.5, 0.5}, {1, 1}, {{0, 1}}, {{1.0, 0}, {3.0, 0}});
    CHECK(contextual_utility(w, PromptId{0}, ContextId{0}, CompletionId{0}) ==
          doctest::Approx(2.0));
  }
  SUBCASE("weighted average") {
    // restricted masses 0.25 / 0.75 inside the cell {0, 1}
    const auto w = one_prompt_world({0.1, 0.3, 0.6}, {1, 1, 1}, {{0, 1}, {2}},
                                    {{0.0, 0}, {4.0, 0}, {-9, 0}});
    CHECK(contextual_utility(w, PromptId{0}, ContextId{0}, CompletionId{0}) ==
          doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("empty cell") {
    const auto w = one_prompt_world({0.5, 0.5}, {1, 0}, {{0}, {1}}, {{0, 0}, {0, 0}});
    CHECK(code_of([&] { contextual_utility(w, PromptId{0}, ContextId{1}, CompletionId{0}); }) ==
          ErrorCode::kEmptyContext);
  }
  SUBCASE("point mass") {
    const auto w = one_prompt_world({0.5, 0.5}, {0, 1}, {{0, 1}}, {{9, 0}, {1.7, 0}});
    CHECK(prompt_utility(w, PromptId{0}, CompletionId{0}) == doctest::Approx(1.7));
  }
  SUBCASE("dot product") {
    // 0.2*1 + 0.3*2 + 0.5*3
    const auto w = one_prompt_world({0.2, 0.3, 0.5}, {1, 1, 1}, {{0}, {1, 2}},
                                    {{1, 0}, {2, 0}, {3, 0}});
    CHECK(prompt_utility(w, PromptId{0}, CompletionId{0}) == doctest::Approx(2.3).epsilon(1e-12));
  }
}

TEST_CASE("delta and bt_probability") {
  CHECK(delta(2.0, 2.0) == 0.0);
  CHECK(delta(3.0, 1.0) == 2.0);
  Philox rng(12);
  for (int k = 0; k < 1000; ++k) {
    const double a = 100 * (uniform01(rng) - 0.5);
    const double b = 100 * (uniform01(rng) - 0.5);
    CHECK(delta(a, b) == -delta(b, a));
  }
  CHECK(bt_probability(0.0) == 0.5);
  // mpmath at 30 digits: 0.731058578630004879..., 0.0474258731775667808...
  CHECK(bt_probability(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  CHECK(bt_probability(-3.0) == doctest::Approx(0.04742587317756678).epsilon(1e-15));
  const double saturated = bt_probability(40.0);
  CHECK(saturated > 1.0 - 1e-15);
  CHECK(saturated <= 1.0);
  CHECK(std::isfinite(bt_probability(-1000.0)));
  CHECK(bt_probability(-1000.0) >= 0.0);
  CHECK(bt_probability(1000.0) == 1.0);
}

TEST_CASE("sample_preference") {
  SUBCASE("zero delta is a fair coin") {
    const auto w = simulate::two_completion_world(0.0);
    const PreferenceQuery q{PromptId{0}, CompletionId{0}, CompletionId{1}, std::nullopt};
    int first = 0;
    for (std::uint64_t s = 0; s < 10'000; ++s) {
      first += sample_preference(w, q, derive_seed(77, s)) == Choice::kFirst;
    }
    CHECK(std::abs(first / 10'000.0 - 0.5) <= 0.02);
  }
  SUBCASE("saturated delta") {
    const auto w = simulate::two_completion_world(50.0);
    const PreferenceQuery q{PromptId{0}, CompletionId{0}, CompletionId{1}, std::nullopt};
    for (std::uint64_t s = 0; s < 1000; ++s) CHECK(sample_preference(w, q, s) == Choice::kFirst);
  }
  SUBCASE("deterministic") {
    const auto w = simulate::two_completion_world(0.3);
    const PreferenceQuery q{PromptId{0}, CompletionId{0}, CompletionId{1}, ContextId{0}};
    for (std::uint64_t s = 0; s < 200; ++s) {
      CHECK(sample_preference(w, q, s) == sample_preference(w, q, s));
    }
  }
  SUBCASE("invalid query") {
    const auto w = simulate::two_completion_world(0.3);
    CHECK_THROWS_AS(sample_preference(w, {PromptId{0}, CompletionId{0}, CompletionId{0}, {}}, 1),
                    Error);
  }
}

TEST_CASE("annotator temperature flattens the posterior") {
  // Two intents that disagree; the posterior favours intent 0.
  const auto w = one_prompt_world({0.9, 0.1}, {1, 1}, {{0, 1}}, {{1, 0}, {-1, 0}});
  const PreferenceQuery q{PromptId{0}, CompletionId{0}, CompletionId{1}, std::nullopt};
  const double exact = query_delta(w, q);
  CHECK(exact == doctest::Approx(0.8));
  CHECK(query_delta(w, q, Annotator{1e6}) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(query_delta(w, q, Annotator{0.01}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tower property and posterior normalization on random worlds") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto w = simulate::random_world({}, seed);
    for (std::size_t x = 0; x < w.num_prompts(); ++x) {
      const PromptId prompt{x};
      const auto pi = intent_posterior(w, prompt);
      const auto pz = context_posterior(w, prompt);
      REQUIRE(std::abs(sum(pi) - 1.0) < 1e-9);
      REQUIRE(std::abs(sum(pz) - 1.0) < 1e-9);
      for (auto y : w.completions_of(prompt)) {
        double decomposed = 0.0;
        for (std::size_t z = 0; z < w.num_contexts(); ++z) {
          if (pz[z] > 0.0) decomposed += pz[z] * contextual_utility(w, prompt, ContextId{z}, y);
        }
        REQUIRE(std::abs(prompt_utility(w, prompt, y) - decomposed) < 1e-9);
      }
    }
  }
}

TEST_CASE("logistic identities") {
  Philox rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const double d = 100.0 * uniform01(rng) - 50.0;
    REQUIRE(std::abs(bt_probability(d) + bt_probability(-d) - 1.0) < 1e-12);
    REQUIRE(bt_probability(d) > 0.0);
  }
}

TEST_CASE("shift invariance") {
  Philox rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto base = simulate::random_world({}, static_cast<std::uint64_t>(trial));
    auto spec = base.spec();
    const double c = 20.0 * uniform01(rng) - 10.0;
    // Shift every utility of prompt 0's completions by c.
    for (auto y : base.completions_of(PromptId{0})) {
      for (std::size_t i = 0; i < spec.intents.size(); ++i) spec.utility(i, y.value) += c;
    }
    const auto shifted = World::create(spec);
    const auto ys = base.completions_of(PromptId{0});
    for (std::size_t z = 0; z <= base.num_contexts(); ++z) {
      const std::optional<ContextId> context =
          z < base.num_contexts() ? std::optional(ContextId{z}) : std::nullopt;
      if (context && context_posterior(base, PromptId{0})[z] == 0.0) continue;
      const PreferenceQuery q{PromptId{0}, ys[0], ys[1], context};
      CHECK(query_delta(base, q) == doctest::Approx(query_delta(shifted, q)).epsilon(1e-9));
      for (std::uint64_t s = 0; s < 20; ++s) {
        const auto seed = derive_seed(static_cast<std::uint64_t>(trial), s);
        if (std::abs(bt_probability(query_delta(base, q)) -
                     bt_probability(query_delta(shifted, q))) < 1e-12) {
          CHECK(sample_preference(base, q, seed) == sample_preference(shifted, q, seed));
        }
      }
    }
  }
}

TEST_CASE("world file round trip") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto w = simulate::random_world({}, seed);
    std::stringstream first;
    write_world(first, w);
    std::stringstream in(first.str());
    const auto back = read_world(in);
    std::stringstream second;
    write_world(second, back);
    REQUIRE(first.str() == second.str());
    CHECK(back.spec().utility.data == w.spec().utility.data);
    CHECK(back.spec().intent_prior == w.spec().intent_prior);
  }
}

TEST_CASE("world file errors carry coordinates") {
  const auto w = simulate::two_completion_world(1.0);
  std::stringstream out;
  write_world(out, w);
  const std::string good = out.str();

  auto parse_error = [](const std::string& text) -> std::string {
    std::stringstream in(text);
    try {
      read_world(in);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      return e.what();
    }
    return "";
  };
  SUBCASE("bad number in a table") {
    std::string text = good;
    const auto pos = text.find("utility:");
    const auto row = text.find('\n', pos) + 1;
    const auto colon = text.find(':', row);
    text.replace(colon + 1, text.find('\n', colon) - colon - 1, " 1 abc");
    const auto message = parse_error(text);
    CHECK(message.find("utility (row 1, column 2)") != std::string::npos);
    CHECK(message.find("'abc' is not a number") != std::string::npos);
  }
  SUBCASE("unsupported format") {
    const auto message = parse_error("format: other/9\n");
    CHECK(message.find("line 1") != std::string::npos);
  }
  SUBCASE("truncated") {
    const auto message = parse_error(good.substr(0, good.find("utility:")));
    CHECK(message.find("unexpected end of file") != std::string::npos);
  }
}
