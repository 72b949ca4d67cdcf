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
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "common.hpp"
#include "ctxpref/aggregate.hpp"
#include "ctxpref/bound.hpp"
#include "ctxpref/dataset.hpp"
#include "ctxpref/error.hpp"
#include "ctxpref/fit.hpp"
#include "ctxpref/pipeline.hpp"
#include "ctxpref/rng.hpp"
#include "ctxpref/simulate.hpp"
#include "ctxpref/world.hpp"

namespace ctxpref::cli {
namespace {

using Json = nlohmann::ordered_json;

struct SimulateFlags {
  std::string mode = "reversal";
  simulate::ReversalOptions reversal;
  simulate::RandomWorldOptions random;
  std::size_t preferences = 1000;
  bool unconditioned = false;
  double annotator_temperature = 1.0;
  std::string world_out;
  std::string pairs_out;
};

void add_simulate(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<SimulateFlags>();
  auto* sub = app.add_subcommand("simulate", "generate a world file and sampled preferences");
  sub->add_option("--mode", flags->mode, "reversal or random world")
      ->check(CLI::IsMember({"reversal", "random"}))
      ->capture_default_str();
  sub->add_option("--prompts", flags->reversal.prompts)->capture_default_str();
  sub->add_option("--contexts", flags->reversal.contexts)->capture_default_str();
  sub->add_option("--completions", flags->reversal.completions_per_prompt,
                  "completions per prompt (reversal) or the maximum (random)")
      ->capture_default_str();
  sub->add_option("--intents-per-context", flags->reversal.intents_per_context)
      ->capture_default_str();
  sub->add_option("--intents", flags->random.intents, "intents (random mode)")
      ->capture_default_str();
  sub->add_option("--margin-low", flags->reversal.margin_low)->capture_default_str();
  sub->add_option("--margin-high", flags->reversal.margin_high)->capture_default_str();
  sub->add_option("--preferences", flags->preferences, "number of sampled preferences")
      ->capture_default_str();
  sub->add_flag("--unconditioned", flags->unconditioned,
                "annotate with prompt-level utilities and omit contexts");
  sub->add_option("--annotator-temperature", flags->annotator_temperature,
                  "flattens (>1) or sharpens (<1) the annotator's intent posterior")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--world-out", flags->world_out, "world file to write")->required();
  sub->add_option("--pairs-out", flags->pairs_out, "paired reversal samples (reversal mode)");

  registry.emplace_back(sub, [flags, &globals] {
    const auto seed = require_seed(globals, "simulate");
    auto& f = *flags;
    if (f.reversal.prompts == 0) throw UsageError("--prompts must be positive");
    if (f.reversal.contexts == 0) throw UsageError("--contexts must be positive");
    World world = [&] {
      if (f.mode == "reversal") return simulate::reversal_world(f.reversal, derive_seed(seed, 0));
      f.random.prompts = f.reversal.prompts;
      f.random.contexts = f.reversal.contexts;
      f.random.max_completions = f.reversal.completions_per_prompt;
      return simulate::random_world(f.random, derive_seed(seed, 0));
    }();
    save_world(f.world_out, world);

    const Annotator annotator{f.annotator_temperature};
    const auto records =
        f.unconditioned
            ? simulate::sample_unconditioned_preferences(world, f.preferences,
                                                         derive_seed(seed, 1), annotator)
            : simulate::sample_preferences(world, f.preferences, derive_seed(seed, 1), annotator);
    emit(globals, dataset::records_to_jsonl(records));

    if (!f.pairs_out.empty()) {
      if (f.mode != "reversal") throw UsageError("--pairs-out needs --mode reversal");
      const auto pairs = simulate::reversal_pairs(world);
      dataset::write_rpr_file(f.pairs_out, pairs);
      log(globals, judge::LogLevel::kInfo,
          fmt::format("wrote {} reversal pairs to {}", pairs.size(), f.pairs_out));
    }
    log(globals, judge::LogLevel::kInfo,
        fmt::format("world: {} intents, {} prompts, {} contexts, {} completions; {} preferences",
                    world.num_intents(), world.num_prompts(), world.num_contexts(),
                    world.num_completions(), records.size()));
  });
}

struct VerifyFlags {
  std::string world;
  std::string estimator;
  double noise = 0.5;
  double mix = 0.2;
  std::size_t queries = 10'000;
  std::size_t bins = 10;
};

void add_verify_bound(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<VerifyFlags>();
  auto* sub = app.add_subcommand("verify-bound", "Monte Carlo check of the context decomposition bound");
  sub->add_option("--world", flags->world, "world file")->required();
  sub->add_option("--estimator", flags->estimator,
                  "estimator file, 'truth', or 'perturbed' (see --noise, --mix)")
      ->required();
  sub->add_option("--noise", flags->noise, "value noise for 'perturbed'")->capture_default_str();
  sub->add_option("--mix", flags->mix, "posterior mixing weight for 'perturbed'")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("-n,--queries", flags->queries)->capture_default_str();
  sub->add_option("--bins", flags->bins, "slack histogram bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  registry.emplace_back(sub, [flags, &globals] {
    const auto seed = require_seed(globals, "verify-bound");
    const auto& f = *flags;
    const World world = load_world(f.world);
    fit::Estimator estimator;
    if (f.estimator == "truth") {
      estimator = bound::truth_estimator(world);
    } else if (f.estimator == "perturbed") {
      estimator = bound::perturbed_estimator(world, f.noise, f.mix, derive_seed(seed, 1));
    } else {
      estimator = fit::load_estimator(f.estimator);
    }
    const auto summary = bound::verify_bounds_monte_carlo(world, estimator, f.queries,
                                                          derive_seed(seed, 0), globals.workers,
                                                          f.bins);
    const double width =
        summary.histogram.empty()
            ? 0.0
            : std::max(summary.max_slack, 0.0) / static_cast<double>(summary.histogram.size());
    std::string out;
    if (globals.json) {
      Json head{{"record", "summary"},
                {"queries", summary.queries},
                {"violations", summary.violations},
                {"min_slack", summary.min_slack},
                {"max_slack", summary.max_slack},
                {"max_lhs", summary.max_lhs}};
      out += head.dump() + "\n";
      for (std::size_t k = 0; k < summary.histogram.size(); ++k) {
        Json bin{{"record", "histogram"},
                 {"bin", k},
                 {"low", width * static_cast<double>(k)},
                 {"high", width * static_cast<double>(k + 1)},
                 {"count", summary.histogram[k]}};
        out += bin.dump() + "\n";
      }
      if (summary.first_violation) {
        const auto& v = *summary.first_violation;
        Json line{{"record", "violation"},     {"index", *summary.first_violation_index},
                  {"lhs", v.lhs},              {"prediction_term", v.prediction_term},
                  {"inference_term", v.inference_term}, {"rhs", v.rhs}};
        out += line.dump() + "\n";
      }
    } else {
      out += fmt::format("queries     {}\nviolations  {}\nmin slack   {:.6g}\nmax slack   {:.6g}\n"
                         "max |lhs|   {:.6g}\n\n{:>12} {:>12} {:>8}\n",
                         summary.queries, summary.violations, summary.min_slack,
                         summary.max_slack, summary.max_lhs, "slack from", "to", "count");
      for (std::size_t k = 0; k < summary.histogram.size(); ++k) {
        out += fmt::format("{:>12.4g} {:>12.4g} {:>8}\n", width * static_cast<double>(k),
                           width * static_cast<double>(k + 1), summary.histogram[k]);
      }
    }
    emit(globals, out);
    if (summary.violations > 0) {
      throw CheckFailed(fmt::format("bound violated on {} of {} queries", summary.violations,
                                    summary.queries));
    }
  });
}

struct AggregateFlags {
  std::string instance;
  bool witness = false;
  bool search = false;
  std::size_t contexts = 3;
  std::size_t alternatives = 2;
  std::size_t max_tries = 10'000;
};

Json result_json(const aggregate::AggregationResult& r) {
  return {{"winner", r.winner}, {"scores", r.scores}, {"tie_broken", r.tie_broken}};
}

void add_aggregate(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<AggregateFlags>();
  auto* sub = app.add_subcommand("aggregate", "Borda, expected-utility and jury winners");
  auto* instance = sub->add_option("--instance", flags->instance, "instance JSON file");
  auto* witness = sub->add_flag("--witness", flags->witness, "use the built-in divergence witness");
  auto* search = sub->add_flag("--search", flags->search,
                               "search for an instance where Borda and expected utility differ");
  instance->excludes(witness)->excludes(search);
  witness->excludes(search);
  sub->add_option("--contexts", flags->contexts, "contexts for --search")->capture_default_str();
  sub->add_option("--alternatives", flags->alternatives, "alternatives for --search")
      ->capture_default_str();
  sub->add_option("--max-tries", flags->max_tries)->capture_default_str();

  registry.emplace_back(sub, [flags, &globals] {
    const auto& f = *flags;
    aggregate::AggregationInstance inst;
    if (f.witness) {
      inst = aggregate::divergence_witness();
    } else if (f.search) {
      const auto seed = require_seed(globals, "aggregate --search");
      auto found =
          aggregate::find_divergent_instance(f.contexts, f.alternatives, seed, f.max_tries);
      if (!found) {
        throw CheckFailed(fmt::format("no divergent instance in {} tries", f.max_tries));
      }
      inst = std::move(*found);
    } else if (!f.instance.empty()) {
      std::ifstream in(f.instance);
      if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot read '{}'", f.instance));
      std::stringstream buffer;
      buffer << in.rdbuf();
      inst = aggregate::instance_from_json(buffer.str());
    } else {
      throw UsageError("give --instance, --witness or --search");
    }
    const auto borda = aggregate::borda_winner(inst);
    const auto eu = aggregate::expected_utility_winner(inst);
    std::optional<aggregate::AggregationResult> jury;
    if (inst.jury_weights) jury = aggregate::jury_winner(inst);

    if (globals.json) {
      Json doc{{"instance", Json::parse(aggregate::instance_to_json(inst))},
               {"borda", result_json(borda)},
               {"expected_utility", result_json(eu)},
               {"jury", jury ? result_json(*jury) : Json(nullptr)},
               {"borda_differs_from_expected_utility", borda.winner != eu.winner}};
      emit(globals, doc.dump(2) + "\n");
      return;
    }
    std::string out = fmt::format("{:<18} {:>6}  scores\n", "rule", "winner");
    auto row = [&](std::string_view name, const aggregate::AggregationResult& r) {
      out += fmt::format("{:<18} {:>6}  [{:.6g}]{}\n", name, r.winner, fmt::join(r.scores, ", "),
                         r.tie_broken ? "  (tie, lowest index)" : "");
    };
    row("borda", borda);
    row("expected-utility", eu);
    if (jury) row("jury", *jury);
    out += fmt::format("\nborda and expected utility {}\n",
                       borda.winner != eu.winner ? "disagree" : "agree");
    emit(globals, out);
  });
}

struct FitFlags {
  std::string input;
  std::string world;
  fit::FitOptions options;
  double posterior_smoothing = 1.0;
};

void add_fit(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<FitFlags>();
  auto* sub = app.add_subcommand("fit", "fit a tabular Bradley-Terry estimator");
  sub->add_option("--input", flags->input, "preference records (JSONL)")->required();
  sub->add_flag("--context-aware", flags->options.context_aware,
                "one utility per (prompt, context, completion)");
  sub->add_option("--l2", flags->options.l2_strength)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--tolerance", flags->options.tolerance, "gradient-norm stopping tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--max-iters", flags->options.max_iters)->capture_default_str();
  sub->add_option("--posterior-smoothing", flags->posterior_smoothing,
                  "additive smoothing of the fitted context posterior")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--world", flags->world,
                  "take the prompt and context lists from this world file");

  registry.emplace_back(sub, [flags, &globals] {
    const auto& f = *flags;
    const auto records = dataset::read_records(f.input);
    const auto result =
        f.world.empty()
            ? simulate::fit_records(records, f.options, f.posterior_smoothing)
            : simulate::fit_records(load_world(f.world), records, f.options,
                                    f.posterior_smoothing);
    emit(globals, fit::estimator_to_json(result.estimator));
    log(globals, judge::LogLevel::kInfo,
        fmt::format("fitted {} cells from {} records in {} iterations (gradient norm {:.3g})",
                    result.estimator.values.size(), records.size(), result.iterations,
                    result.gradient_norm));
  });
}

struct EndToEndFlags {
  pipeline::EndToEndOptions options;
};

void add_end_to_end(CLI::App& app, const Globals& globals, Registry& registry) {
  auto flags = std::make_shared<EndToEndFlags>();
  auto& o = flags->options;
  auto* sub = app.add_subcommand(
      "end-to-end", "simulate, fit with and without context, evaluate and verify the bound");
  sub->add_option("--prompts", o.world.prompts)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--contexts", o.world.contexts)->capture_default_str();
  sub->add_option("--completions", o.world.completions_per_prompt)->capture_default_str();
  sub->add_option("--intents-per-context", o.world.intents_per_context)->capture_default_str();
  sub->add_option("--margin-low", o.world.margin_low)->capture_default_str();
  sub->add_option("--margin-high", o.world.margin_high)->capture_default_str();
  sub->add_option("--preferences", o.train_preferences, "training preferences")
      ->capture_default_str();
  sub->add_option("--l2", o.fit.l2_strength)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--tolerance", o.fit.tolerance)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--max-iters", o.fit.max_iters)->capture_default_str();
  sub->add_option("--bound-queries", o.bound_queries)->capture_default_str();
  sub->add_option("--bins", o.histogram_bins)->check(CLI::PositiveNumber)->capture_default_str();

  registry.emplace_back(sub, [flags, &globals] {
    const auto seed = require_seed(globals, "end-to-end");
    auto options = flags->options;
    options.workers = globals.workers;
    const auto report = pipeline::end_to_end(options, seed);
    emit(globals, globals.json ? pipeline::report_to_json(report).dump(2) + "\n"
                               : pipeline::format_report(report));
    const auto violations = report.ctx_bound.violations + report.nc_bound.violations;
    if (violations > 0) {
      throw CheckFailed(fmt::format("bound violated on {} queries", violations));
    }
  });
}

}  // namespace

void add_simulation_commands(CLI::App& app, const Globals& globals, Registry& registry) {
  add_simulate(app, globals, registry);
  add_verify_bound(app, globals, registry);
  add_aggregate(app, globals, registry);
  add_fit(app, globals, registry);
  add_end_to_end(app, globals, registry);
}

}  // namespace ctxpref::cli
