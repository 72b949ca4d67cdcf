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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ctxpref/dataset.hpp"
#include "ctxpref/eval.hpp"
#include "ctxpref/profile.hpp"

namespace ctxpref::judge {

enum class TemplateKind {
  kCriteriaCot,    // explanation, then "[[rating]]"
  kCriteriaNoCot,  // rating first
  kCriteriaLogit,  // "I give the assistant a score of X/max"
  kRmContext,      // reward-model prompt with context
  kRmPlain,        // reward-model prompt without context
};

std::string_view to_string(TemplateKind kind);
std::optional<TemplateKind> template_from_string(std::string_view text);
std::string_view template_text(TemplateKind kind);

/// Replaces every {{name}} in `text` with values.at(name) in one left-to-right
/// pass; substituted text is never rescanned. Throws kMissingPlaceholderValue
/// for a placeholder without a value.
std::string render(std::string_view text, const std::map<std::string, std::string, std::less<>>& values);

/// "User: <prompt>\n\nAssistant: <completion>".
std::string format_conversation(std::string_view prompt, std::string_view completion);

/// Renders a shipped template. Templates that mention {{context}} require a
/// nonempty context (kMissingPlaceholderValue otherwise).
std::string render_template(TemplateKind kind, std::string_view prompt, std::string_view completion,
                            std::optional<std::string_view> context, int max_score);

/// First "[[k]]" with 1 <= k <= max_score; otherwise the number after
/// "score of " when it lies in [1, max_score]. Throws kUnparseableRating.
double parse_rating(std::string_view response_text, int max_score);

enum class ScoringMode { kArgmax, kLogit };

struct RetryPolicy {
  std::size_t max_attempts = 4;
  std::chrono::milliseconds backoff_base{250};
};

enum class LogLevel { kDebug, kInfo, kWarning, kError };
using LogSink = std::function<void(LogLevel, std::string_view)>;

struct JudgeConfig {
  /// Full URL of a chat-completions endpoint, e.g. https://host/v1/chat/completions.
  std::string endpoint_url;
  /// Environment variable holding the API key; unset or empty sends no key.
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::string model_name;
  TemplateKind template_kind = TemplateKind::kCriteriaNoCot;
  int max_score = 10;
  double temperature = 0.0;
  ScoringMode mode = ScoringMode::kArgmax;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  std::chrono::seconds timeout{60};
  /// Content-addressed response cache; empty keeps the cache in memory only.
  std::string cache_dir;
};

/// Throws kInvalidArgument for max_score < 2, negative temperature, logit
/// mode outside the logit template or with scores above 9 (multi-token), an
/// unparsable URL, or max_in_flight outside [1, 1024].
void validate(const JudgeConfig& config);

/// Hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Chat-completions client with retries, bounded concurrency and a response
/// cache keyed by (template, system prompt, rendered text, model, temperature,
/// mode). Identical concurrent requests share one network call. Safe to use
/// from several threads.
class JudgeClient {
 public:
  explicit JudgeClient(JudgeConfig config, LogSink log = {});
  ~JudgeClient();
  JudgeClient(const JudgeClient&) = delete;
  JudgeClient& operator=(const JudgeClient&) = delete;

  const JudgeConfig& config() const noexcept { return config_; }

  /// Renders, sends (or reads from cache) and parses one rating.
  double score(std::string_view prompt, std::string_view completion,
               std::optional<std::string_view> context);

  /// Assistant message content for a system and user message.
  std::string chat(std::string_view system, std::string_view user);

  std::size_t network_requests() const noexcept { return requests_.load(); }
  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }

 private:
  struct State;

  std::string fetch(const std::string& cache_key, const std::string& body);
  std::string post_with_retries(const std::string& body);
  void log(LogLevel level, std::string_view message) const;

  JudgeConfig config_;
  LogSink log_;
  std::string api_key_;
  std::unique_ptr<State> state_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// eval::Scorer backed by a JudgeClient. Failures surface as exceptions and
/// become kScorerFailure in eval::compare.
class JudgeScorer final : public eval::Scorer {
 public:
  explicit JudgeScorer(std::shared_ptr<JudgeClient> client) : client_(std::move(client)) {}
  double score(std::string_view prompt, std::string_view completion,
               std::optional<std::string_view> context) const override {
    return client_->score(prompt, completion, context);
  }
  std::string name() const override;

 private:
  std::shared_ptr<JudgeClient> client_;
};

/// Formats (prompt, preferred, rejected) tuples for the profile prompt.
std::string format_preference_samples(std::span<const dataset::PreferenceRecord> samples);

/// Extracts the final profile from a profile-inference response: the string
/// value of "Profile" in the last JSON object of the text. Throws
/// kBackendFailure when none is present.
std::string parse_profile_response(std::string_view response_text);

/// Profile inference through a chat endpoint using the shipped profile prompt.
class ExternalProfileInferrer final : public profile::ProfileInferrer {
 public:
  explicit ExternalProfileInferrer(std::shared_ptr<JudgeClient> client)
      : client_(std::move(client)) {}
  std::string infer(std::span<const dataset::PreferenceRecord> samples) const override;

 private:
  std::shared_ptr<JudgeClient> client_;
};

}  // namespace ctxpref::judge
