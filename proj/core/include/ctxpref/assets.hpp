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

#include <array>
#include <string_view>

// Shipped text assets: judge prompt templates, reward-model prompt formats,
// dataset context maps, general contexts, adversarial criteria and the five
// user profiles. Template placeholders are written as {{name}}.
namespace ctxpref::assets {

struct ContextMapEntry {
  std::string_view subset;
  std::string_view context;
};

extern const std::string_view kJudgeSystemPrompt;
extern const std::string_view kCriteriaLogitTemplate;
extern const std::string_view kCriteriaLogitCompletionPrefix;
extern const std::string_view kCriteriaArgmaxTemplate;
extern const std::string_view kCriteriaArgmaxNoCotTemplate;
extern const std::string_view kRewardModelContextTemplate;
extern const std::string_view kRewardModelPlainTemplate;
extern const std::string_view kPrometheusTemplate;

extern const std::string_view kNonsenseCriteria;
extern const std::string_view kNegativeCriteria;

extern const std::string_view kProfileInferencePrompt;
extern const std::string_view kLabelWithProfilePrompt;

extern const std::array<std::string_view, 16> kGeneralContexts;
extern const std::array<std::string_view, 5> kProfiles;

extern const std::array<ContextMapEntry, 4> kHhhContextMap;
extern const std::array<ContextMapEntry, 23> kRewardBenchContextMap;

}  // namespace ctxpref::assets
