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

#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "common.hpp"
#include "ctxpref/error.hpp"

int main(int argc, char** argv) {
  using namespace ctxpref::cli;
  Globals globals;
  CLI::App app{"Context-aware preference modeling: simulation, fitting, bounds and evaluation.",
               "ctxpref"};
  app.set_config("--config", "", "TOML/INI file with default flags; command-line flags win");
  app.add_option("--seed", globals.seed, "run seed (required by stochastic commands)");
  app.add_option("--workers", globals.workers, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("-o,--output", globals.output, "output path (default stdout)");
  app.add_option("--log-level", globals.log_level)
      ->check(CLI::IsMember({"debug", "info", "warning", "error"}))
      ->capture_default_str();
  app.add_flag("--json", globals.json, "machine-readable output");
  app.require_subcommand(1);

  Registry registry;
  add_simulation_commands(app, globals, registry);
  add_dataset_commands(app, globals, registry);
  add_evaluation_commands(app, globals, registry);
  for (auto& [sub, command] : registry) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& [sub, command] : registry) {
      if (sub->parsed()) command();
    }
  } catch (const UsageError& e) {
    fmt::print(stderr, "ctxpref: usage: {}\n", e.what());
    return 2;
  } catch (const CheckFailed& e) {
    fmt::print(stderr, "ctxpref: check failed: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "ctxpref: error: {}\n", e.what());
    return 1;
  }
  return 0;
}
