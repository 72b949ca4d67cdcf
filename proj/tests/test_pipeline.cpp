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

#include <chrono>

#include "ctxpref/error.hpp"
#include "ctxpref/pipeline.hpp"

using namespace ctxpref;

TEST_CASE("tiny world runs quickly and separates contexts") {
  pipeline::EndToEndOptions options;
  options.world.prompts = 10;
  options.train_preferences = 400;
  options.bound_queries = 500;
  const auto start = std::chrono::steady_clock::now();
  const auto report = pipeline::end_to_end(options, 1);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  CHECK(elapsed.count() < 1.0);

  CHECK(report.prompts == 10);
  CHECK(report.test_pairs == 10);
  CHECK(report.ctx.n == 20);
  CHECK(report.nc.agreement == 0.5);
  CHECK(report.ctx.agreement >= 0.9);
  CHECK(report.ctx_bound.violations == 0);
  CHECK(report.nc_bound.violations == 0);
  CHECK(report.ctx_bound.queries == 500);
}

TEST_CASE("default scale") {
  const auto report = pipeline::end_to_end({}, 7);
  CHECK(report.ctx.agreement >= 0.95);
  CHECK(report.nc.agreement >= 0.45);
  CHECK(report.nc.agreement <= 0.55);
  CHECK(report.train_records == 5000);
  CHECK(report.ctx_fit.gradient_norm < 1e-6);
  CHECK(report.ctx_bound.violations == 0);
  CHECK(report.nc_bound.violations == 0);
}

TEST_CASE("reports are reproducible and independent of workers") {
  pipeline::EndToEndOptions options;
  options.world.prompts = 30;
  options.train_preferences = 1000;
  options.bound_queries = 2000;
  const auto a = pipeline::report_to_json(pipeline::end_to_end(options, 3)).dump();
  const auto b = pipeline::report_to_json(pipeline::end_to_end(options, 3)).dump();
  options.workers = 6;
  const auto c = pipeline::report_to_json(pipeline::end_to_end(options, 3)).dump();
  CHECK(a == b);
  CHECK(a == c);
  options.workers = 1;
  CHECK(pipeline::report_to_json(pipeline::end_to_end(options, 4)).dump() != a);
}

TEST_CASE("json and text output") {
  pipeline::EndToEndOptions options;
  options.world.prompts = 8;
  options.train_preferences = 300;
  options.bound_queries = 100;
  const auto report = pipeline::end_to_end(options, 2);
  const auto json = pipeline::report_to_json(report);
  for (const char* key : {"seed", "world", "train_records", "test_pairs", "fits", "agreement", "bound"}) {
    CHECK_MESSAGE(json.contains(key), key);
  }
  CHECK(json["agreement"]["ctx"]["protocol"] == "ctx");
  CHECK(json["bound"]["nc"]["violations"] == 0);
  CHECK(json["bound"]["ctx"]["histogram"].size() == 10);
  CHECK_FALSE(json["bound"]["ctx"].contains("first_violation"));
  const auto text = pipeline::format_report(report);
  CHECK(text.find("ctx") != std::string::npos);
  CHECK(text.find("nc") != std::string::npos);
}

TEST_CASE("invalid options propagate") {
  pipeline::EndToEndOptions options;
  options.world.prompts = 0;
  CHECK_THROWS_AS(pipeline::end_to_end(options, 1), Error);
  options.world.prompts = 5;
  options.fit.l2_strength = -1.0;
  CHECK_THROWS_AS(pipeline::end_to_end(options, 1), Error);
}
