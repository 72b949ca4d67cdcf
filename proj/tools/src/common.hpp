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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ctxpref/judge.hpp"

namespace ctxpref::cli {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::string output;
  std::string log_level = "warning";
  bool json = false;
};

// Bad flag combinations found after parsing; reported like parse errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a command ran but its result is a failure (bound violated,
// dataset rejected); the data was already written.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Command = std::function<void()>;
using Registry = std::vector<std::pair<CLI::App*, Command>>;

std::uint64_t require_seed(const Globals& globals, std::string_view command);

// Writes to --output, or stdout when it is empty or "-".
void emit(const Globals& globals, std::string_view text);
void write_text_file(const std::string& path, std::string_view text);

judge::LogLevel parse_log_level(std::string_view text);
void log(const Globals& globals, judge::LogLevel level, std::string_view message);
judge::LogSink log_sink(const Globals& globals);

struct JudgeFlags {
  std::string endpoint;
  std::string model;
  std::string template_name = "criteria-judge-no-cot";
  int max_score = 10;
  double temperature = 0.0;
  std::string scoring = "argmax";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string cache_dir;
  std::size_t max_in_flight = 4;
  std::size_t max_attempts = 4;
  long timeout_seconds = 60;
};

void add_judge_flags(CLI::App& app, JudgeFlags& flags);
judge::JudgeConfig judge_config(const JudgeFlags& flags);

void add_simulation_commands(CLI::App& app, const Globals& globals, Registry& registry);
void add_dataset_commands(CLI::App& app, const Globals& globals, Registry& registry);
void add_evaluation_commands(CLI::App& app, const Globals& globals, Registry& registry);

}  // namespace ctxpref::cli
