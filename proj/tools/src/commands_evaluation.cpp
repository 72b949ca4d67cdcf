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

#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "common.hpp"
#include "ctxpref/dataset.hpp"
#include "ctxpref/error.hpp"
#include "ctxpref/eval.hpp"
#include "ctxpref/fit.hpp"
#include "ctxpref/judge.hpp"
#include "ctxpref/profile.hpp"
#include "ctxpref/rng.hpp"
#include "ctxpref/world.hpp"

namespace ctxpref::cli {
namespace {

using Json = nlohmann::ordered_json;

struct EvalFlags {
  std::string data;
  std::string rpr;
  std::string backend = "estimator";
  std::string estimator;
  std::string world;
  double constant = 0.0;
  std::string protocol = "ctx";
  double tie_epsilon = 0.0;
  std::string interval = "wald";
  std::string outcomes;
  JudgeFlags judge;
};

std::vector<dataset::PreferenceRecord> load_eval_records(const EvalFlags& f) {
  if (!f.data.empty() && !f.rpr.empty()) throw UsageError("give one of --data and --rpr");
  if (!f.data.empty()) return dataset::read_records(f.data);
  if (!f.rpr.empty()) return dataset::expand_pairs(dataset::read_rpr_file(f.rpr));
  throw UsageError("give --data or --rpr");
}

void add_eval(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<EvalFlags>();
  auto* sub = app.add_subcommand("eval", "agreement of a scorer with labeled preferences");
  sub->add_option("--data", flags->data, "preference records (JSONL)");
  sub->add_option("--rpr", flags->rpr, "paired samples (JSONL), expanded to two records each");
  sub->add_option("--backend", flags->backend,
                  "estimator (file), random, constant, oracle (follows the gold labels), "
                  "world (ground-truth utilities) or judge (network)")
      ->check(CLI::IsMember({"estimator", "random", "constant", "oracle", "world", "judge"}))
      ->capture_default_str();
  sub->add_option("--estimator", flags->estimator, "estimator file for --backend estimator");
  sub->add_option("--world", flags->world, "world file for --backend world");
  sub->add_option("--constant", flags->constant, "score for --backend constant");
  sub->add_option("--protocol", flags->protocol)
      ->check(CLI::IsMember({"nc", "ctx", "nonsense", "negative"}))
      ->capture_default_str();
  sub->add_option("--tie-epsilon", flags->tie_epsilon, "score gaps up to this count as ties")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--interval", flags->interval)
      ->check(CLI::IsMember({"wald", "wilson"}))
      ->capture_default_str();
  sub->add_option("--outcomes", flags->outcomes, "per-record outcomes (JSONL)");
  add_judge_flags(*sub, flags->judge);

  registry.emplace_back(sub, [flags, &globals] {
    const auto seed = require_seed(globals, "eval");
    const auto& f = *flags;
    const auto records = load_eval_records(f);

    std::unique_ptr<eval::Scorer> scorer;
    std::shared_ptr<judge::JudgeClient> client;
    if (f.backend == "estimator") {
      if (f.estimator.empty()) throw UsageError("--backend estimator needs --estimator");
      scorer = std::make_unique<eval::EstimatorScorer>(fit::load_estimator(f.estimator));
    } else if (f.backend == "random") {
      scorer = std::make_unique<eval::RandomScorer>(derive_seed(seed, 1));
    } else if (f.backend == "constant") {
      scorer = std::make_unique<eval::ConstantScorer>(f.constant);
    } else if (f.backend == "oracle") {
      scorer = std::make_unique<eval::ObedientOracleScorer>(records, derive_seed(seed, 1));
    } else if (f.backend == "world") {
      if (f.world.empty()) throw UsageError("--backend world needs --world");
      scorer = std::make_unique<eval::WorldScorer>(std::make_shared<const World>(load_world(f.world)));
    } else {
      client = std::make_shared<judge::JudgeClient>(judge_config(f.judge), log_sink(globals));
      scorer = std::make_unique<judge::JudgeScorer>(client);
    }

    eval::EvalOptions options;
    options.tie_epsilon = f.tie_epsilon;
    options.workers = globals.workers;
    options.interval = f.interval == "wilson" ? eval::IntervalKind::kWilson : eval::IntervalKind::kWald;
    const auto protocol = *eval::protocol_from_string(f.protocol);
    const auto report = eval::run_protocol(*scorer, records, protocol, seed, options);

    if (!f.outcomes.empty()) {
      write_text_file(f.outcomes, eval::outcomes_to_jsonl(records, report.outcomes));
    }
    emit(globals, globals.json ? eval::report_to_json(report).dump(2) + "\n"
                               : eval::format_report(report));
    if (client) {
      log(globals, judge::LogLevel::kInfo,
          fmt::format("judge: {} network requests, {} cache hits", client->network_requests(),
                      client->cache_hits()));
    }
  });
}

struct ProfileFlags {
  std::string mode = "simulator";
  std::string profiles;
  profile::StudyOptions study;
  std::string test;
  std::string pool;
  std::string csv;
  JudgeFlags judge;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot read '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto doc = Json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kParseError, fmt::format("'{}' is not JSON", path));
  return doc;
}

std::vector<std::string> read_profile_texts(const std::string& path) {
  const auto doc = read_json_file(path);
  const Json& list = doc.is_object() && doc.contains("profiles") ? doc["profiles"] : doc;
  if (!list.is_array() || list.empty()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("'{}' must hold a nonempty array of profile strings", path));
  }
  std::vector<std::string> out;
  for (const auto& item : list) {
    if (!item.is_string()) {
      throw Error(ErrorCode::kParseError, fmt::format("'{}': profiles must be strings", path));
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

void add_infer_profile(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<ProfileFlags>();
  auto& s = flags->study;
  auto* sub = app.add_subcommand("infer-profile",
                                 "agreement as a function of the samples used to infer a profile");
  sub->add_option("--mode", flags->mode,
                  "simulator (offline Bayes inferrer) or external (judge backend)")
      ->check(CLI::IsMember({"simulator", "external"}))
      ->capture_default_str();
  sub->add_option("--profiles", flags->profiles,
                  "simulator: JSON {profile_weights, agreement_with_base}; "
                  "external: JSON array of profile texts");
  sub->add_option("--n-grid", s.n_grid, "sample counts")->delimiter(',')->capture_default_str();
  sub->add_option("--seeds", s.seeds, "subset seeds")->delimiter(',')->capture_default_str();
  sub->add_option("--train-prompts", s.train_prompts)->capture_default_str();
  sub->add_option("--test-prompts", s.test_prompts)->capture_default_str();
  sub->add_option("--pool-size", s.pool_size, "labeled training samples per profile")
      ->capture_default_str();
  sub->add_option("--scorer-samples", s.scorer_train_samples,
                  "preferences used to fit the simulated scorer")
      ->capture_default_str();
  sub->add_option("--test", flags->test, "external: test records (JSONL)");
  sub->add_option("--pool", flags->pool, "external: unlabeled training records (JSONL)");
  sub->add_option("--csv", flags->csv, "plot-ready curve data");
  add_judge_flags(*sub, flags->judge);

  registry.emplace_back(sub, [flags, &globals] {
    const auto seed = require_seed(globals, "infer-profile");
    auto& f = *flags;
    profile::StudyResult result;
    if (f.mode == "simulator") {
      auto options = f.study;
      options.workers = globals.workers;
      if (!f.profiles.empty()) {
        const auto doc = read_json_file(f.profiles);
        try {
          if (doc.contains("profile_weights")) {
            options.profile_weights = doc["profile_weights"].get<std::vector<double>>();
          }
          if (doc.contains("agreement_with_base")) {
            options.agreement_with_base = doc["agreement_with_base"].get<std::vector<double>>();
          }
        } catch (const Json::exception& e) {
          throw Error(ErrorCode::kParseError, fmt::format("'{}': {}", f.profiles, e.what()));
        }
      }
      result = profile::run_simulated_study(options, seed);
    } else {
      if (f.profiles.empty() || f.test.empty() || f.pool.empty()) {
        throw UsageError("external mode needs --profiles, --test and --pool");
      }
      auto client =
          std::make_shared<judge::JudgeClient>(judge_config(f.judge), log_sink(globals));
      const judge::JudgeScorer scorer(client);
      const judge::ExternalProfileInferrer inferrer(client);
      profile::LabeledStudyInput input;
      input.profiles = read_profile_texts(f.profiles);
      input.test = dataset::read_records(f.test);
      input.pool = dataset::read_records(f.pool);
      input.n_grid = f.study.n_grid;
      input.seeds = f.study.seeds;
      input.workers = globals.workers;
      result = profile::run_labeled_study(inferrer, scorer, scorer, input, seed);
    }
    if (!f.csv.empty()) write_text_file(f.csv, profile::study_to_csv(result));
    emit(globals, globals.json ? profile::study_to_json(result).dump(2) + "\n"
                               : profile::format_study(result));
  });
}

}  // namespace

void add_evaluation_commands(CLI::App& app, const Globals& globals, Registry& registry) {
  add_eval(app, globals, registry);
  add_infer_profile(app, globals, registry);
}

}  // namespace ctxpref::cli
