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

#include "ctxpref/judge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <mutex>
#include <regex>
#include <semaphore>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ctxpref/assets.hpp"
#include "ctxpref/error.hpp"

namespace ctxpref::judge {
namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::ptrdiff_t kMaxInFlight = 1024;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

std::optional<Endpoint> parse_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) return std::nullopt;
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") return std::nullopt;
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  if (authority.empty()) return std::nullopt;
  Endpoint e;
  e.origin = std::string(url.substr(0, scheme_end + 3 + authority.size()));
  e.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  return e;
}

bool is_rm_template(TemplateKind kind) {
  return kind == TemplateKind::kRmContext || kind == TemplateKind::kRmPlain;
}

std::string join_key(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (const auto part : parts) {
    out += fmt::format("{}:", part.size());
    out += part;
    out += '\x1f';
  }
  return out;
}

std::string message_content(const std::string& body) {
  const auto doc = Json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kTransportError, "response is not JSON");
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kTransportError, "response has no choices[0].message.content");
  }
}

double logit_score(const std::string& body, int max_score) {
  const auto doc = Json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kTransportError, "response is not JSON");
  std::vector<double> logits(static_cast<std::size_t>(max_score),
                             -std::numeric_limits<double>::infinity());
  try {
    for (const auto& entry : doc.at("choices").at(0).at("logprobs").at("content").at(0).at("top_logprobs")) {
      std::string token = entry.at("token").get<std::string>();
      token.erase(std::remove_if(token.begin(), token.end(), [](char c) { return c == ' '; }),
                  token.end());
      if (token.size() != 1 || token[0] < '1' || token[0] > '9') continue;
      const int k = token[0] - '0';
      if (k > max_score) continue;
      auto& slot = logits[static_cast<std::size_t>(k - 1)];
      slot = std::max(slot, entry.at("logprob").get<double>());
    }
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kTransportError, "response has no token log-probabilities");
  }
  std::vector<double> present_logits;
  std::vector<double> values;
  for (int k = 1; k <= max_score; ++k) {
    const double l = logits[static_cast<std::size_t>(k - 1)];
    if (std::isfinite(l)) {
      present_logits.push_back(l);
      values.push_back(k);
    }
  }
  if (present_logits.empty()) {
    throw Error(ErrorCode::kUnparseableRating, "no score token among the top log-probabilities");
  }
  return eval::expected_score_from_logits(present_logits, values);
}

double reward_score(const std::string& body) {
  const auto doc = Json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kTransportError, "response is not JSON");
  const Json* node = &doc;
  if (node->is_array() && !node->empty()) node = &(*node)[0];
  if (node->is_object() && node->contains("score") && (*node)["score"].is_number()) {
    return (*node)["score"].get<double>();
  }
  throw Error(ErrorCode::kTransportError, "reward response has no numeric 'score'");
}

void write_atomically(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  const auto tmp = path.parent_path() /
                   fmt::format(".{}.{}.tmp", path.filename().string(),
                               std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kCriteriaCot: return "criteria-judge-cot";
    case TemplateKind::kCriteriaNoCot: return "criteria-judge-no-cot";
    case TemplateKind::kCriteriaLogit: return "criteria-judge-logit";
    case TemplateKind::kRmContext: return "rm-style-context";
    case TemplateKind::kRmPlain: return "rm-style-plain";
  }
  return "criteria-judge-no-cot";
}

std::optional<TemplateKind> template_from_string(std::string_view text) {
  for (const auto kind : {TemplateKind::kCriteriaCot, TemplateKind::kCriteriaNoCot,
                          TemplateKind::kCriteriaLogit, TemplateKind::kRmContext,
                          TemplateKind::kRmPlain}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view template_text(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kCriteriaCot: return assets::kCriteriaArgmaxTemplate;
    case TemplateKind::kCriteriaNoCot: return assets::kCriteriaArgmaxNoCotTemplate;
    case TemplateKind::kCriteriaLogit: return assets::kCriteriaLogitTemplate;
    case TemplateKind::kRmContext: return assets::kRewardModelContextTemplate;
    case TemplateKind::kRmPlain: return assets::kRewardModelPlainTemplate;
  }
  return assets::kCriteriaArgmaxNoCotTemplate;
}

std::string render(std::string_view text,
                   const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const auto name = text.substr(open + 2, close - open - 2);
    const bool is_name = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
    if (!is_name) {
      out.append(text.substr(pos, open + 2 - pos));
      pos = open + 2;
      continue;
    }
    const auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorCode::kMissingPlaceholderValue,
                  fmt::format("no value for placeholder {{{{{}}}}}", name));
    }
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

std::string format_conversation(std::string_view prompt, std::string_view completion) {
  return fmt::format("User: {}\n\nAssistant: {}", prompt, completion);
}

std::string render_template(TemplateKind kind, std::string_view prompt, std::string_view completion,
                            std::optional<std::string_view> context, int max_score) {
  const auto text = template_text(kind);
  std::map<std::string, std::string, std::less<>> values{
      {"prompt", std::string(prompt)},
      {"completion", std::string(completion)},
      {"conversation", format_conversation(prompt, completion)},
      {"max_score", std::to_string(max_score)},
  };
  if (context && !context->empty()) values.emplace("context", std::string(*context));
  return render(text, values);
}

double parse_rating(std::string_view response_text, int max_score) {
  static const std::regex bracketed(R"(\[\[\s*(\d+)\s*\]\])");
  static const std::regex score_of(R"(score of\s*(\d+(?:\.\d+)?))");
  const std::string text(response_text);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), bracketed);
       it != std::sregex_iterator(); ++it) {
    const auto digits = (*it)[1].str();
    if (digits.size() > 6) continue;
    const int k = std::stoi(digits);
    if (k >= 1 && k <= max_score) return k;
  }
  for (auto it = std::sregex_iterator(text.begin(), text.end(), score_of);
       it != std::sregex_iterator(); ++it) {
    const double v = std::stod((*it)[1].str());
    if (v >= 1.0 && v <= max_score) return v;
  }
  const auto preview = text.substr(0, 80);
  throw Error(ErrorCode::kUnparseableRating, fmt::format("no rating in response '{}'", preview));
}

void validate(const JudgeConfig& config) {
  if (config.max_score < 2) throw Error(ErrorCode::kInvalidArgument, "max_score must be >= 2");
  if (!(config.temperature >= 0.0) || !std::isfinite(config.temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
  if (config.mode == ScoringMode::kLogit) {
    if (config.template_kind != TemplateKind::kCriteriaLogit) {
      throw Error(ErrorCode::kInvalidArgument, "logit mode needs the criteria-judge-logit template");
    }
    if (config.max_score > 9) {
      throw Error(ErrorCode::kInvalidArgument,
                  "logit mode supports single-token score ranges only (max_score <= 9)");
    }
  }
  if (config.max_in_flight == 0 || config.max_in_flight > static_cast<std::size_t>(kMaxInFlight)) {
    throw Error(ErrorCode::kInvalidArgument, "max_in_flight must lie in [1, 1024]");
  }
  if (config.retry.max_attempts == 0) {
    throw Error(ErrorCode::kInvalidArgument, "retry.max_attempts must be positive");
  }
  if (!parse_url(config.endpoint_url)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("endpoint_url '{}' is not an http(s) URL", config.endpoint_url));
  }
  if (config.model_name.empty()) throw Error(ErrorCode::kInvalidArgument, "model_name is empty");
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInvalidArgument, "SHA-256 failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int k = 0; k < length; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

struct JudgeClient::State {
  explicit State(std::ptrdiff_t slots) : in_flight(slots) {}
  Endpoint endpoint;
  std::mutex mutex;
  std::unordered_map<std::string, std::shared_future<std::string>> responses;
  std::counting_semaphore<kMaxInFlight> in_flight;
};

JudgeClient::JudgeClient(JudgeConfig config, LogSink sink)
    : config_(std::move(config)), log_(std::move(sink)) {
  validate(config_);
  state_ = std::make_unique<State>(static_cast<std::ptrdiff_t>(config_.max_in_flight));
  state_->endpoint = *parse_url(config_.endpoint_url);
  if (const char* key = std::getenv(config_.api_key_env_var.c_str()); key && *key) {
    api_key_ = key;
  } else {
    log(LogLevel::kWarning,
        fmt::format("{} is not set; requests carry no credentials", config_.api_key_env_var));
  }
}

JudgeClient::~JudgeClient() = default;

void JudgeClient::log(LogLevel level, std::string_view message) const {
  if (log_) log_(level, message);
}

std::string JudgeClient::post_with_retries(const std::string& body) {
  const auto& endpoint = state_->endpoint;
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  std::string last_error;
  for (std::size_t attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    ++requests_;
    auto result = client.Post(endpoint.path, headers, body, "application/json");
    std::chrono::milliseconds wait =
        config_.retry.backoff_base * (std::int64_t{1} << std::min<std::size_t>(attempt - 1, 20));
    if (!result) {
      last_error = httplib::to_string(result.error());
    } else if (result->status >= 200 && result->status < 300) {
      log(LogLevel::kDebug, fmt::format("POST {} -> {} (attempt {})", endpoint.path,
                                        result->status, attempt));
      return result->body;
    } else if (result->status == 429 || result->status >= 500) {
      last_error = fmt::format("HTTP {}", result->status);
      if (result->has_header("Retry-After")) {
        const auto value = result->get_header_value("Retry-After");
        char* end = nullptr;
        const long seconds = std::strtol(value.c_str(), &end, 10);
        if (end != value.c_str() && seconds >= 0) {
          wait = std::max(wait, std::chrono::milliseconds(std::min(seconds, 30L) * 1000));
        }
      }
    } else {
      throw Error(ErrorCode::kTransportError,
                  fmt::format("POST {}{} returned HTTP {}", endpoint.origin, endpoint.path,
                              result->status));
    }
    if (attempt == config_.retry.max_attempts) break;
    log(LogLevel::kWarning, fmt::format("POST {} failed ({}); retry {} of {} in {} ms",
                                        endpoint.path, last_error, attempt,
                                        config_.retry.max_attempts - 1, wait.count()));
    std::this_thread::sleep_for(wait);
  }
  log(LogLevel::kError, fmt::format("POST {} failed after {} attempts: {}", endpoint.path,
                                    config_.retry.max_attempts, last_error));
  throw Error(ErrorCode::kTransportError,
              fmt::format("{}{} failed after {} attempts: {}", endpoint.origin, endpoint.path,
                          config_.retry.max_attempts, last_error));
}

std::string JudgeClient::fetch(const std::string& cache_key, const std::string& body) {
  std::promise<std::string> promise;
  {
    std::unique_lock lock(state_->mutex);
    const auto it = state_->responses.find(cache_key);
    if (it != state_->responses.end()) {
      auto future = it->second;
      lock.unlock();
      ++cache_hits_;
      return future.get();
    }
    state_->responses.emplace(cache_key, promise.get_future().share());
  }
  try {
    std::optional<fs::path> file;
    if (!config_.cache_dir.empty()) {
      file = fs::path(config_.cache_dir) / cache_key.substr(0, 2) / (cache_key + ".json");
    }
    if (file && fs::exists(*file)) {
      std::ifstream in(*file, std::ios::binary);
      std::stringstream buffer;
      buffer << in.rdbuf();
      ++cache_hits_;
      log(LogLevel::kDebug, fmt::format("cache hit {}", cache_key.substr(0, 12)));
      auto bytes = buffer.str();
      promise.set_value(bytes);
      return bytes;
    }
    state_->in_flight.acquire();
    std::string response;
    try {
      response = post_with_retries(body);
    } catch (...) {
      state_->in_flight.release();
      throw;
    }
    state_->in_flight.release();
    if (file) write_atomically(*file, response);
    promise.set_value(response);
    return response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(state_->mutex);
    state_->responses.erase(cache_key);
    throw;
  }
}

double JudgeClient::score(std::string_view prompt, std::string_view completion,
                          std::optional<std::string_view> context) {
  const auto kind = config_.template_kind;
  const auto rendered =
      render_template(kind, prompt, completion, context, config_.max_score);
  const auto temperature = fmt::format("{:.17g}", config_.temperature);
  const auto mode = config_.mode == ScoringMode::kLogit ? "logit" : "argmax";

  if (is_rm_template(kind)) {
    Json request{{"model", config_.model_name}, {"input", rendered}};
    const auto key = sha256_hex(join_key({"reward", template_text(kind), rendered,
                                          config_.model_name, temperature, mode}));
    return reward_score(fetch(key, request.dump()));
  }

  Json messages = Json::array();
  messages.push_back({{"role", "system"}, {"content", assets::kJudgeSystemPrompt}});
  messages.push_back({{"role", "user"}, {"content", rendered}});
  Json request{{"model", config_.model_name}, {"temperature", config_.temperature}};
  if (config_.mode == ScoringMode::kLogit) {
    messages.push_back(
        {{"role", "assistant"}, {"content", assets::kCriteriaLogitCompletionPrefix}});
    request["max_tokens"] = 1;
    request["logprobs"] = true;
    request["top_logprobs"] = 20;
  }
  request["messages"] = std::move(messages);
  const auto key = sha256_hex(join_key({"chat-score", template_text(kind),
                                        assets::kJudgeSystemPrompt, rendered, config_.model_name,
                                        temperature, mode}));
  const auto body = fetch(key, request.dump());
  if (config_.mode == ScoringMode::kLogit) return logit_score(body, config_.max_score);
  return parse_rating(message_content(body), config_.max_score);
}

std::string JudgeClient::chat(std::string_view system, std::string_view user) {
  Json messages = Json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  Json request{{"model", config_.model_name},
               {"temperature", config_.temperature},
               {"messages", std::move(messages)}};
  const auto key = sha256_hex(join_key({"chat", system, user, config_.model_name,
                                        fmt::format("{:.17g}", config_.temperature)}));
  return message_content(fetch(key, request.dump()));
}

std::string JudgeScorer::name() const { return "judge:" + client_->config().model_name; }

std::string format_preference_samples(std::span<const dataset::PreferenceRecord> samples) {
  std::string out;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (k) out += "\n\n";
    out += fmt::format("Sample {}\nPrompt: {}\nPreferred response: {}\nRejected response: {}",
                       k + 1, samples[k].prompt, samples[k].chosen, samples[k].rejected);
  }
  return out;
}

std::string parse_profile_response(std::string_view response_text) {
  for (auto open = response_text.rfind('{'); open != std::string_view::npos;
       open = open == 0 ? std::string_view::npos : response_text.rfind('{', open - 1)) {
    const auto close = response_text.rfind('}');
    if (close == std::string_view::npos || close < open) continue;
    const auto doc = Json::parse(response_text.substr(open, close - open + 1), nullptr, false);
    if (doc.is_object() && doc.contains("Profile") && doc["Profile"].is_string()) {
      return doc["Profile"].get<std::string>();
    }
  }
  throw Error(ErrorCode::kBackendFailure, "profile response has no \"Profile\" string");
}

std::string ExternalProfileInferrer::infer(
    std::span<const dataset::PreferenceRecord> samples) const {
  const auto prompt =
      render(assets::kProfileInferencePrompt, {{"samples", format_preference_samples(samples)}});
  return parse_profile_response(client_->chat("", prompt));
}

}  // namespace ctxpref::judge
