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

#include <memory>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "common.hpp"
#include "ctxpref/dataset.hpp"

namespace ctxpref::cli {
namespace {

using Json = nlohmann::ordered_json;

void add_validate(CLI::App& app, const Globals& globals, Registry& registry) {
  auto input = std::make_shared<std::string>();
  auto* sub = app.add_subcommand("validate-dataset", "structural checks of a paired JSONL file");
  sub->add_option("--input", *input, "paired samples (JSONL)")->required();

  registry.emplace_back(sub, [input, &globals] {
    const auto report = dataset::validate_rpr_file(*input);
    if (globals.json) {
      Json doc{{"accepted", report.accepted},
               {"rejected", report.rejected},
               {"first_errors", report.first_errors}};
      emit(globals, doc.dump(2) + "\n");
    } else {
      std::string out =
          fmt::format("accepted  {}\nrejected  {}\n", report.accepted, report.rejected);
      for (const auto& e : report.first_errors) out += "  " + e + "\n";
      emit(globals, out);
    }
    if (report.rejected > 0) {
      throw CheckFailed(fmt::format("{} of {} samples rejected", report.rejected,
                                    report.accepted + report.rejected));
    }
  });
}

struct SplitFlags {
  std::string input;
  double test_fraction = 0.2;
  std::string train_out;
  std::string test_out;
  bool trim = false;
};

std::size_t unique_prompts(std::span<const dataset::PairedRprSample> samples) {
  std::set<std::string> prompts;
  for (const auto& s : samples) prompts.insert(s.prompt);
  return prompts.size();
}

void add_split(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<SplitFlags>();
  auto* sub = app.add_subcommand("split", "train/test split with no shared prompts");
  sub->add_option("--input", flags->input, "paired samples (JSONL)")->required();
  sub->add_option("--test-fraction", flags->test_fraction, "fraction of unique prompts in test")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--train-out", flags->train_out)->required();
  sub->add_option("--test-out", flags->test_out)->required();
  sub->add_flag("--trim-whitespace", flags->trim,
                "treat prompts differing only in surrounding whitespace as one prompt");

  registry.emplace_back(sub, [flags, &globals] {
    const auto seed = require_seed(globals, "split");
    const auto& f = *flags;
    const auto samples = dataset::read_rpr_file(f.input);
    const auto split = dataset::split_train_test(
        samples, f.test_fraction, seed,
        f.trim ? dataset::PromptIdentity::kTrimWhitespace : dataset::PromptIdentity::kExact);
    dataset::write_rpr_file(f.train_out, split.train);
    dataset::write_rpr_file(f.test_out, split.test);
    if (globals.json) {
      Json doc{{"train", {{"samples", split.train.size()}, {"prompts", unique_prompts(split.train)}}},
               {"test", {{"samples", split.test.size()}, {"prompts", unique_prompts(split.test)}}}};
      emit(globals, doc.dump(2) + "\n");
    } else {
      emit(globals, fmt::format("train  {} samples, {} prompts\ntest   {} samples, {} prompts\n",
                                split.train.size(), unique_prompts(split.train),
                                split.test.size(), unique_prompts(split.test)));
    }
  });
}

struct AugmentFlags {
  std::string input;
  std::string mode;
  std::string context_map = "hhh";
  std::optional<std::string> default_context;
  std::string kind = "criteria";
};

void add_augment(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<AugmentFlags>();
  auto* sub = app.add_subcommand("augment", "attach contexts to preference records");
  sub->add_option("--input", flags->input,
                  "paired samples for 'expand', preference records otherwise")
      ->required();
  sub->add_option("--mode", flags->mode,
                  "expand: pairs to records; subset: context from the subset map; "
                  "nonsense/negative: adversarial criteria; general: random general context; "
                  "pair: records sharing a prompt to paired samples")
      ->check(CLI::IsMember({"expand", "subset", "nonsense", "negative", "general", "pair"}))
      ->required();
  sub->add_option("--context-map", flags->context_map,
                  "'hhh', 'rewardbench' or a JSON file {subset: context}")
      ->capture_default_str();
  sub->add_option("--default-context", flags->default_context,
                  "context for subsets missing from the map");
  sub->add_option("--kind", flags->kind, "kind of the paired samples built by 'pair'")
      ->check(CLI::IsMember({"criteria", "scenarios"}))
      ->capture_default_str();

  registry.emplace_back(sub, [flags, &globals] {
    const auto& f = *flags;
    if (f.mode == "expand") {
      const auto pairs = dataset::read_rpr_file(f.input);
      emit(globals, dataset::records_to_jsonl(dataset::expand_pairs(pairs)));
      return;
    }
    const auto records = dataset::read_records(f.input);
    if (f.mode == "pair") {
      const auto pairs =
          dataset::pair_by_prompt(records, *dataset::rpr_kind_from_string(f.kind));
      std::string out;
      for (const auto& p : pairs) out += dataset::to_json_line(p) + "\n";
      emit(globals, out);
      return;
    }
    std::vector<dataset::PreferenceRecord> augmented;
    if (f.mode == "subset") {
      const auto map = f.context_map == "hhh"           ? dataset::hhh_context_map()
                       : f.context_map == "rewardbench" ? dataset::rewardbench_context_map()
                                                        : dataset::load_context_map(f.context_map);
      augmented = dataset::attach_subset_contexts(records, map, f.default_context);
    } else if (f.mode == "nonsense") {
      augmented = dataset::attach_adversarial_context(records, dataset::AdversarialVariant::kNonsense);
    } else if (f.mode == "negative") {
      augmented = dataset::attach_adversarial_context(records, dataset::AdversarialVariant::kNegative);
    } else {
      augmented = dataset::attach_general_context(records, require_seed(globals, "augment --mode general"));
    }
    emit(globals, dataset::records_to_jsonl(augmented));
  });
}

}  // namespace

void add_dataset_commands(CLI::App& app, const Globals& globals, Registry& registry) {
  add_validate(app, globals, registry);
  add_split(app, globals, registry);
  add_augment(app, globals, registry);
}

}  // namespace ctxpref::cli
