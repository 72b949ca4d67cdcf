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

#include "ctxpref/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "ctxpref/assets.hpp"
#include "ctxpref/error.hpp"
#include "ctxpref/rng.hpp"

namespace ctxpref::dataset {
namespace {

constexpr std::string_view kRprFields[] = {"id",        "kind",         "prompt",      "context_a",
                                           "context_b", "completion_a", "completion_b"};
constexpr std::string_view kRecordFields[] = {"id",      "pair_id", "prompt", "context",
                                              "context_source", "subset", "chosen", "rejected"};

template <std::size_t N>
bool is_known(const std::string& key, const std::string_view (&fields)[N]) {
  return std::find(std::begin(fields), std::end(fields), key) != std::end(fields);
}

Json parse_object(std::string_view line, std::size_t line_number) {
  Json doc;
  try {
    doc = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: invalid JSON ({})", line_number, e.what()));
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kMalformedRecord, fmt::format("line {}: not an object", line_number));
  }
  return doc;
}

std::string required_text(const Json& doc, std::string_view field, std::size_t line_number) {
  const auto it = doc.find(field);
  if (it == doc.end()) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: missing field '{}'", line_number, field));
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: field '{}' is not a string", line_number, field));
  }
  auto value = it->get<std::string>();
  if (value.empty()) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: field '{}' is empty", line_number, field));
  }
  return value;
}

std::optional<std::string> optional_text(const Json& doc, std::string_view field,
                                         std::size_t line_number) {
  const auto it = doc.find(field);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: field '{}' is not a string", line_number, field));
  }
  return it->get<std::string>();
}

template <std::size_t N>
Json collect_extra(const Json& doc, const std::string_view (&fields)[N]) {
  Json extra = Json::object();
  for (const auto& [key, value] : doc.items()) {
    if (!is_known(key, fields)) extra[key] = value;
  }
  return extra;
}

template <std::size_t N>
void append_extra(Json& doc, const Json& extra, const std::string_view (&fields)[N]) {
  for (const auto& [key, value] : extra.items()) {
    if (!is_known(key, fields)) doc[key] = value;
  }
}

std::string dump(const Json& doc) {
  return doc.dump(-1, ' ', false, Json::error_handler_t::strict);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open '{}'", path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, fmt::format("read failed for '{}'", path));
  return lines;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", path));
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("write failed for '{}'", path));
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

template <std::size_t N>
ContextMap to_map(const std::array<assets::ContextMapEntry, N>& entries) {
  ContextMap map;
  for (const auto& e : entries) map.emplace(std::string(e.subset), std::string(e.context));
  return map;
}

}  // namespace

std::string_view to_string(RprKind kind) {
  return kind == RprKind::kCriteria ? "criteria" : "scenarios";
}

std::optional<RprKind> rpr_kind_from_string(std::string_view text) {
  if (text == "criteria") return RprKind::kCriteria;
  if (text == "scenarios") return RprKind::kScenarios;
  return std::nullopt;
}

std::string_view to_string(ContextSource source) {
  switch (source) {
    case ContextSource::kSubsetMap: return "subset-map";
    case ContextSource::kTeacher: return "teacher";
    case ContextSource::kOracle: return "oracle";
    case ContextSource::kAdversarialNonsense: return "adversarial-nonsense";
    case ContextSource::kAdversarialNegative: return "adversarial-negative";
    case ContextSource::kGeneral: return "general";
  }
  return "general";
}

std::optional<ContextSource> context_source_from_string(std::string_view text) {
  for (const auto source :
       {ContextSource::kSubsetMap, ContextSource::kTeacher, ContextSource::kOracle,
        ContextSource::kAdversarialNonsense, ContextSource::kAdversarialNegative,
        ContextSource::kGeneral}) {
    if (to_string(source) == text) return source;
  }
  return std::nullopt;
}

std::string to_json_line(const PairedRprSample& sample) {
  Json doc = Json::object();
  doc["id"] = sample.id;
  doc["kind"] = to_string(sample.kind);
  doc["prompt"] = sample.prompt;
  doc["context_a"] = sample.context_a;
  doc["context_b"] = sample.context_b;
  doc["completion_a"] = sample.completion_a;
  doc["completion_b"] = sample.completion_b;
  append_extra(doc, sample.extra, kRprFields);
  return dump(doc);
}

std::string to_json_line(const PreferenceRecord& record) {
  Json doc = Json::object();
  doc["id"] = record.id;
  if (record.pair_id) doc["pair_id"] = *record.pair_id;
  doc["prompt"] = record.prompt;
  if (record.context) doc["context"] = *record.context;
  if (record.context_source) doc["context_source"] = to_string(*record.context_source);
  if (record.subset) doc["subset"] = *record.subset;
  doc["chosen"] = record.chosen;
  doc["rejected"] = record.rejected;
  append_extra(doc, record.extra, kRecordFields);
  return dump(doc);
}

PairedRprSample parse_rpr_line(std::string_view line, std::size_t line_number) {
  const Json doc = parse_object(line, line_number);
  PairedRprSample sample;
  sample.id = required_text(doc, "id", line_number);
  const auto kind_text = required_text(doc, "kind", line_number);
  const auto kind = rpr_kind_from_string(kind_text);
  if (!kind) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: field 'kind' has unknown value '{}'", line_number, kind_text));
  }
  sample.kind = *kind;
  sample.prompt = required_text(doc, "prompt", line_number);
  sample.context_a = required_text(doc, "context_a", line_number);
  sample.context_b = required_text(doc, "context_b", line_number);
  sample.completion_a = required_text(doc, "completion_a", line_number);
  sample.completion_b = required_text(doc, "completion_b", line_number);
  if (sample.context_a == sample.context_b) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: context_a and context_b are identical", line_number));
  }
  if (sample.completion_a == sample.completion_b) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: completion_a and completion_b are identical", line_number));
  }
  sample.extra = collect_extra(doc, kRprFields);
  return sample;
}

PreferenceRecord parse_record_line(std::string_view line, std::size_t line_number) {
  const Json doc = parse_object(line, line_number);
  PreferenceRecord record;
  record.id = required_text(doc, "id", line_number);
  record.pair_id = optional_text(doc, "pair_id", line_number);
  record.prompt = required_text(doc, "prompt", line_number);
  record.context = optional_text(doc, "context", line_number);
  if (const auto source = optional_text(doc, "context_source", line_number)) {
    record.context_source = context_source_from_string(*source);
    if (!record.context_source) {
      throw Error(ErrorCode::kMalformedRecord,
                  fmt::format("line {}: field 'context_source' has unknown value '{}'",
                              line_number, *source));
    }
  }
  record.subset = optional_text(doc, "subset", line_number);
  record.chosen = required_text(doc, "chosen", line_number);
  record.rejected = required_text(doc, "rejected", line_number);
  if (record.chosen == record.rejected) {
    throw Error(ErrorCode::kMalformedRecord,
                fmt::format("line {}: chosen and rejected are identical", line_number));
  }
  record.extra = collect_extra(doc, kRecordFields);
  return record;
}

std::vector<PairedRprSample> read_rpr_file(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<PairedRprSample> samples;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    samples.push_back(parse_rpr_line(lines[i], i + 1));
  }
  return samples;
}

void write_rpr_file(const std::string& path, std::span<const PairedRprSample> samples) {
  std::string text;
  for (const auto& s : samples) {
    text += to_json_line(s);
    text += '\n';
  }
  write_text(path, text);
}

std::vector<PreferenceRecord> read_records(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<PreferenceRecord> records;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    records.push_back(parse_record_line(lines[i], i + 1));
  }
  return records;
}

std::string records_to_jsonl(std::span<const PreferenceRecord> records) {
  std::string text;
  for (const auto& r : records) {
    text += to_json_line(r);
    text += '\n';
  }
  return text;
}

void write_records(const std::string& path, std::span<const PreferenceRecord> records) {
  write_text(path, records_to_jsonl(records));
}

ValidationReport validate_rpr_lines(std::span<const std::string> lines) {
  ValidationReport report;
  std::unordered_set<std::string> seen_ids;
  const auto reject = [&report](std::string message) {
    ++report.rejected;
    if (report.first_errors.size() < ValidationReport::kMaxReportedErrors) {
      report.first_errors.push_back(std::move(message));
    }
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    try {
      const auto sample = parse_rpr_line(lines[i], i + 1);
      if (!seen_ids.insert(sample.id).second) {
        reject(fmt::format("line {}: duplicate id '{}'", i + 1, sample.id));
        continue;
      }
      ++report.accepted;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMalformedRecord) throw;
      // Drop the "MalformedRecord: " prefix; the report is already about that.
      std::string message = e.what();
      const auto colon = message.find(": ");
      reject(colon == std::string::npos ? message : message.substr(colon + 2));
    }
  }
  return report;
}

ValidationReport validate_rpr_file(const std::string& path) {
  const auto lines = read_lines(path);
  return validate_rpr_lines(lines);
}

Split split_train_test(std::span<const PairedRprSample> samples, double test_fraction,
                       std::uint64_t rng_seed, PromptIdentity identity) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("test_fraction must lie in (0, 1), got {}", test_fraction));
  }
  const auto key_of = [identity](const std::string& prompt) {
    return identity == PromptIdentity::kExact ? prompt : trim(prompt);
  };
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::size_t> sample_group(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto [it, inserted] = group_of.try_emplace(key_of(samples[i].prompt), group_of.size());
    sample_group[i] = it->second;
  }
  const std::size_t n_groups = group_of.size();
  std::vector<std::size_t> order(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) order[g] = g;
  Philox rng(rng_seed);
  shuffle(rng, order);

  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n_groups)));
  if (n_groups >= 2) n_test = std::clamp<std::size_t>(n_test, 1, n_groups - 1);
  std::vector<bool> in_test(n_groups, false);
  for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;

  Split split;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (in_test[sample_group[i]] ? split.test : split.train).push_back(samples[i]);
  }
  std::unordered_set<std::string> train_prompts;
  for (const auto& s : split.train) train_prompts.insert(key_of(s.prompt));
  for (const auto& s : split.test) {
    if (train_prompts.count(key_of(s.prompt))) {
      throw Error(ErrorCode::kInvalidArgument, "train and test prompts overlap");
    }
  }
  return split;
}

std::vector<PreferenceRecord> expand_pairs(std::span<const PairedRprSample> samples) {
  std::vector<PreferenceRecord> records;
  records.reserve(2 * samples.size());
  for (const auto& s : samples) {
    PreferenceRecord a;
    a.id = s.id + ":a";
    a.pair_id = s.id;
    a.prompt = s.prompt;
    a.context = s.context_a;
    a.subset = std::string(to_string(s.kind));
    a.chosen = s.completion_a;
    a.rejected = s.completion_b;
    for (const auto& [key, value] : s.extra.items()) {
      if (!is_known(key, kRecordFields)) a.extra[key] = value;
    }
    PreferenceRecord b = a;
    b.id = s.id + ":b";
    b.context = s.context_b;
    b.chosen = s.completion_b;
    b.rejected = s.completion_a;
    records.push_back(std::move(a));
    records.push_back(std::move(b));
  }
  return records;
}

std::vector<PairedRprSample> collapse_pairs(std::span<const PreferenceRecord> records) {
  struct Group {
    const PreferenceRecord* a = nullptr;
    const PreferenceRecord* b = nullptr;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Group> groups;
  for (const auto& r : records) {
    if (!r.pair_id) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("record '{}' has no pair_id", r.id));
    }
    auto [it, inserted] = groups.try_emplace(*r.pair_id);
    if (inserted) order.push_back(*r.pair_id);
    const PreferenceRecord** slot = nullptr;
    if (r.id == *r.pair_id + ":a") slot = &it->second.a;
    if (r.id == *r.pair_id + ":b") slot = &it->second.b;
    if (slot == nullptr || *slot != nullptr) {
      throw Error(ErrorCode::kMalformedRecord,
                  fmt::format("record '{}' does not fit pair '{}'", r.id, *r.pair_id));
    }
    *slot = &r;
  }
  std::vector<PairedRprSample> samples;
  samples.reserve(order.size());
  for (const auto& id : order) {
    const auto& g = groups.at(id);
    if (!g.a || !g.b) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("pair '{}' is incomplete", id));
    }
    if (g.a->prompt != g.b->prompt || g.a->chosen != g.b->rejected ||
        g.a->rejected != g.b->chosen || !g.a->context || !g.b->context) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("pair '{}' is inconsistent", id));
    }
    PairedRprSample s;
    s.id = id;
    s.kind = rpr_kind_from_string(g.a->subset.value_or("criteria")).value_or(RprKind::kCriteria);
    s.prompt = g.a->prompt;
    s.context_a = *g.a->context;
    s.context_b = *g.b->context;
    s.completion_a = g.a->chosen;
    s.completion_b = g.b->chosen;
    s.extra = g.a->extra;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<PairedRprSample> pair_by_prompt(std::span<const PreferenceRecord> records,
                                            RprKind kind) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const PreferenceRecord*>> groups;
  for (const auto& r : records) {
    if (!r.context) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("record '{}' has no context", r.id));
    }
    auto [it, inserted] = groups.try_emplace(r.prompt);
    if (inserted) order.push_back(r.prompt);
    it->second.push_back(&r);
  }
  std::vector<PairedRprSample> samples;
  for (const auto& prompt : order) {
    const auto& group = groups.at(prompt);
    for (std::size_t i = 0; i + 1 < group.size(); i += 2) {
      const auto& first = *group[i];
      const auto& second = *group[i + 1];
      if (*first.context == *second.context || first.chosen == second.chosen) continue;
      PairedRprSample s;
      s.id = first.id + "+" + second.id;
      s.kind = kind;
      s.prompt = prompt;
      s.context_a = *first.context;
      s.context_b = *second.context;
      s.completion_a = first.chosen;
      s.completion_b = second.chosen;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

ContextMap hhh_context_map() { return to_map(assets::kHhhContextMap); }

ContextMap rewardbench_context_map() { return to_map(assets::kRewardBenchContextMap); }

ContextMap load_context_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  ContextMap map;
  try {
    const auto doc = Json::parse(buffer.str());
    if (!doc.is_object()) throw Error(ErrorCode::kParseError, "context map must be an object");
    for (const auto& [subset, context] : doc.items()) {
      if (!context.is_string() || context.get<std::string>().empty()) {
        throw Error(ErrorCode::kParseError,
                    fmt::format("context for subset '{}' must be a nonempty string", subset));
      }
      map.emplace(subset, context.get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("context map '{}': {}", path, e.what()));
  }
  return map;
}

std::vector<PreferenceRecord> attach_subset_contexts(std::span<const PreferenceRecord> samples,
                                                     const ContextMap& context_map,
                                                     const std::optional<std::string>& default_context) {
  std::vector<PreferenceRecord> out(samples.begin(), samples.end());
  for (auto& r : out) {
    const auto it = r.subset ? context_map.find(*r.subset) : context_map.end();
    if (it != context_map.end()) {
      r.context = it->second;
    } else if (default_context) {
      r.context = *default_context;
    } else {
      throw Error(ErrorCode::kMissingSubset,
                  fmt::format("record '{}': no context for subset '{}'", r.id,
                              r.subset.value_or("<none>")));
    }
    r.context_source = ContextSource::kSubsetMap;
  }
  return out;
}

std::string_view adversarial_context(AdversarialVariant variant) {
  return variant == AdversarialVariant::kNonsense ? assets::kNonsenseCriteria
                                                  : assets::kNegativeCriteria;
}

std::vector<PreferenceRecord> attach_adversarial_context(std::span<const PreferenceRecord> samples,
                                                         AdversarialVariant variant) {
  std::vector<PreferenceRecord> out(samples.begin(), samples.end());
  for (auto& r : out) {
    r.context = std::string(adversarial_context(variant));
    r.context_source = variant == AdversarialVariant::kNonsense
                           ? ContextSource::kAdversarialNonsense
                           : ContextSource::kAdversarialNegative;
  }
  return out;
}

std::vector<PreferenceRecord> attach_general_context(std::span<const PreferenceRecord> samples,
                                                     std::uint64_t rng_seed) {
  std::vector<PreferenceRecord> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Philox rng(derive_seed(rng_seed, i));
    out[i].context = std::string(
        assets::kGeneralContexts[uniform_index(rng, assets::kGeneralContexts.size())]);
    out[i].context_source = ContextSource::kGeneral;
  }
  return out;
}

}  // namespace ctxpref::dataset
