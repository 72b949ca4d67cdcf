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

#include "common.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "ctxpref/error.hpp"

namespace ctxpref::cli {

std::uint64_t require_seed(const Globals& globals, std::string_view command) {
  if (!globals.seed) {
    throw UsageError(fmt::format("'{}' is stochastic and needs --seed", command));
  }
  return *globals.seed;
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", path));
}

void emit(const Globals& globals, std::string_view text) {
  if (globals.output.empty() || globals.output == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  write_text_file(globals.output, text);
}

judge::LogLevel parse_log_level(std::string_view text) {
  if (text == "debug") return judge::LogLevel::kDebug;
  if (text == "info") return judge::LogLevel::kInfo;
  if (text == "error") return judge::LogLevel::kError;
  return judge::LogLevel::kWarning;
}

void log(const Globals& globals, judge::LogLevel level, std::string_view message) {
  if (level < parse_log_level(globals.log_level)) return;
  static constexpr const char* kNames[] = {"debug", "info", "warning", "error"};
  fmt::print(stderr, "ctxpref: {}: {}\n", kNames[static_cast<int>(level)], message);
}

judge::LogSink log_sink(const Globals& globals) {
  return [&globals](judge::LogLevel level, std::string_view message) {
    log(globals, level, message);
  };
}

void add_judge_flags(CLI::App& app, JudgeFlags& flags) {
  const auto group = "judge backend";
  app.add_option("--endpoint", flags.endpoint, "chat-completions URL")->group(group);
  app.add_option("--model", flags.model, "model name")->group(group);
  app.add_option("--template", flags.template_name, "judge template")
      ->check(CLI::IsMember({"criteria-judge-cot", "criteria-judge-no-cot", "criteria-judge-logit",
                             "rm-style-context", "rm-style-plain"}))
      ->capture_default_str()
      ->group(group);
  app.add_option("--max-score", flags.max_score, "top of the rating scale")
      ->capture_default_str()
      ->group(group);
  app.add_option("--temperature", flags.temperature)->capture_default_str()->group(group);
  app.add_option("--scoring", flags.scoring, "argmax reads the rating, logit weights score tokens")
      ->check(CLI::IsMember({"argmax", "logit"}))
      ->capture_default_str()
      ->group(group);
  app.add_option("--api-key-env", flags.api_key_env, "environment variable holding the API key")
      ->capture_default_str()
      ->group(group);
  app.add_option("--cache-dir", flags.cache_dir, "response cache directory")->group(group);
  app.add_option("--max-in-flight", flags.max_in_flight)->capture_default_str()->group(group);
  app.add_option("--max-attempts", flags.max_attempts)->capture_default_str()->group(group);
  app.add_option("--timeout", flags.timeout_seconds, "seconds per request")
      ->capture_default_str()
      ->group(group);
}

judge::JudgeConfig judge_config(const JudgeFlags& flags) {
  if (flags.endpoint.empty() || flags.model.empty()) {
    throw UsageError("the judge backend needs --endpoint and --model");
  }
  judge::JudgeConfig config;
  config.endpoint_url = flags.endpoint;
  config.model_name = flags.model;
  config.template_kind = *judge::template_from_string(flags.template_name);
  config.max_score = flags.max_score;
  config.temperature = flags.temperature;
  config.mode = flags.scoring == "logit" ? judge::ScoringMode::kLogit : judge::ScoringMode::kArgmax;
  config.api_key_env_var = flags.api_key_env;
  config.cache_dir = flags.cache_dir;
  config.max_in_flight = flags.max_in_flight;
  config.retry.max_attempts = flags.max_attempts;
  config.timeout = std::chrono::seconds(flags.timeout_seconds);
  return config;
}

}  // namespace ctxpref::cli
