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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctxpref::dataset {

using Json = nlohmann::ordered_json;

enum class RprKind { kCriteria, kScenarios };

std::string_view to_string(RprKind kind);
std::optional<RprKind> rpr_kind_from_string(std::string_view text);

/// One prompt with two contexts and two completions. Under context_a,
/// completion_a is preferred; under context_b, completion_b is preferred.
struct PairedRprSample {
  std::string id;
  RprKind kind = RprKind::kCriteria;
  std::string prompt;
  std::string context_a;
  std::string context_b;
  std::string completion_a;
  std::string completion_b;
  /// Fields not listed above, preserved in order on round-trip.
  Json extra = Json::object();
};

enum class ContextSource {
  kSubsetMap,
  kTeacher,
  kOracle,
  kAdversarialNonsense,
  kAdversarialNegative,
  kGeneral,
};

std::string_view to_string(ContextSource source);
std::optional<ContextSource> context_source_from_string(std::string_view text);

/// A (possibly context-conditioned) preference label: `chosen` is preferred
/// to `rejected` for `prompt` under `context`.
struct PreferenceRecord {
  std::string id;
  std::optional<std::string> pair_id;
  std::string prompt;
  std::optional<std::string> context;
  std::optional<ContextSource> context_source;
  std::optional<std::string> subset;
  std::string chosen;
  std::string rejected;
  Json extra = Json::object();
};

/// Augmented samples and evaluation records share one schema.
using AugmentedPreferenceSample = PreferenceRecord;

// JSONL serialization. Known fields come first in a fixed order, followed by
// preserved unknown fields, so serialize -> parse -> serialize is stable.
std::string to_json_line(const PairedRprSample& sample);
std::string to_json_line(const PreferenceRecord& record);
/// Throws kMalformedRecord naming `line_number` and the offending field.
PairedRprSample parse_rpr_line(std::string_view line, std::size_t line_number = 0);
PreferenceRecord parse_record_line(std::string_view line, std::size_t line_number = 0);

std::vector<PairedRprSample> read_rpr_file(const std::string& path);
void write_rpr_file(const std::string& path, std::span<const PairedRprSample> samples);
std::vector<PreferenceRecord> read_records(const std::string& path);
void write_records(const std::string& path, std::span<const PreferenceRecord> records);
std::string records_to_jsonl(std::span<const PreferenceRecord> records);

struct ValidationReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  /// First `kMaxReportedErrors` problems, each prefixed with its line number.
  std::vector<std::string> first_errors;
  static constexpr std::size_t kMaxReportedErrors = 20;
};

/// Structural validation of an RPR JSONL file: field presence, non-empty
/// texts, kind, distinct contexts and completions, and id uniqueness.
/// Throws kIoError if the file cannot be read.
ValidationReport validate_rpr_file(const std::string& path);
ValidationReport validate_rpr_lines(std::span<const std::string> lines);

enum class PromptIdentity { kExact, kTrimWhitespace };

struct Split {
  std::vector<PairedRprSample> train;
  std::vector<PairedRprSample> test;
};

/// Seeded split by unique prompt: round(test_fraction * unique prompts)
/// prompts (clamped so both sides are non-empty when there are at least two
/// prompts) go to test. Input order is kept within each side.
Split split_train_test(std::span<const PairedRprSample> samples, double test_fraction,
                       std::uint64_t rng_seed,
                       PromptIdentity identity = PromptIdentity::kExact);

/// Two records per pair: "<id>:a" (context_a, chosen = completion_a) and
/// "<id>:b" (context_b, chosen = completion_b). The subset is the pair kind.
std::vector<PreferenceRecord> expand_pairs(std::span<const PairedRprSample> samples);

/// Inverse of expand_pairs: groups records by pair_id. Throws
/// kMalformedRecord when a group is incomplete or inconsistent.
std::vector<PairedRprSample> collapse_pairs(std::span<const PreferenceRecord> records);

/// Groups context-labeled records by identical prompt and pairs consecutive
/// records within each group; a trailing unpaired record is dropped.
std::vector<PairedRprSample> pair_by_prompt(std::span<const PreferenceRecord> records,
                                            RprKind kind);

using ContextMap = std::map<std::string, std::string, std::less<>>;

ContextMap hhh_context_map();
ContextMap rewardbench_context_map();
/// JSON object {"subset": "context", ...}.
ContextMap load_context_map(const std::string& path);

/// Sets context from the subset map (or `default_context`). Throws
/// kMissingSubset for an unmapped subset with no default.
std::vector<PreferenceRecord> attach_subset_contexts(
    std::span<const PreferenceRecord> samples, const ContextMap& context_map,
    const std::optional<std::string>& default_context = std::nullopt);

enum class AdversarialVariant { kNonsense, kNegative };

std::string_view adversarial_context(AdversarialVariant variant);

std::vector<PreferenceRecord> attach_adversarial_context(
    std::span<const PreferenceRecord> samples, AdversarialVariant variant);

/// Sample i receives general context number uniform_index(derive_seed(seed, i)).
std::vector<PreferenceRecord> attach_general_context(std::span<const PreferenceRecord> samples,
                                                     std::uint64_t rng_seed);

}  // namespace ctxpref::dataset
