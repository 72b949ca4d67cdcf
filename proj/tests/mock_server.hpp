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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxpref::testing {

struct MockRequest {
  std::string path;
  std::string body;
  std::string authorization;
};

struct MockReply {
  int status = 200;
  std::string body;
  std::optional<int> retry_after;
};

// Loopback HTTP server for judge-client tests. The handler sees every request
// with its zero-based arrival index.
class MockJudgeServer {
 public:
  using Handler = std::function<MockReply(const MockRequest&, std::size_t index)>;

  explicit MockJudgeServer(Handler handler);
  ~MockJudgeServer();
  MockJudgeServer(const MockJudgeServer&) = delete;
  MockJudgeServer& operator=(const MockJudgeServer&) = delete;

  std::string url(std::string_view path = "/v1/chat/completions") const;
  std::size_t request_count() const;
  std::vector<MockRequest> requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Chat-completions body whose first choice says `content`.
std::string chat_reply(std::string_view content);

// Chat-completions body with top log-probabilities for the given tokens.
std::string logprob_reply(const std::vector<std::pair<std::string, double>>& tokens);

}  // namespace ctxpref::testing
