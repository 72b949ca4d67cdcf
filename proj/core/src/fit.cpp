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

#include "ctxpref/fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ctxpref/error.hpp"

namespace ctxpref::fit {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 80;

// -log sigma(d), stable for large |d|.
double neg_log_sigmoid(double d) {
  return d >= 0.0 ? std::log1p(std::exp(-d)) : -d + std::log1p(std::exp(d));
}

// sigma(d) - 1 = -sigma(-d), the derivative of -log sigma(d).
double neg_log_sigmoid_grad(double d) {
  if (d >= 0.0) {
    const double e = std::exp(-d);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(d));
}

std::optional<std::string_view> datum_context(const PreferenceDatum& datum, bool context_aware) {
  if (!context_aware || !datum.context) return std::nullopt;
  return std::string_view(*datum.context);
}

CellKey make_key(std::string_view prompt, std::optional<std::string_view> context,
                 std::string_view completion, bool context_aware) {
  return {std::string(prompt), context_aware && context ? std::string(*context) : std::string(),
          std::string(completion)};
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t k) {
  while (parent[k] != k) {
    parent[k] = parent[parent[k]];
    k = parent[k];
  }
  return k;
}

struct Component {
  std::vector<std::size_t> cells;  // global indices
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // local indices
};

double local_value(const Component& c, std::span<const double> theta, double l2) {
  double total = 0.0;
  for (const auto& [w, l] : c.pairs) total += neg_log_sigmoid(theta[w] - theta[l]);
  for (const double t : theta) total += l2 * t * t;
  return total;
}

void local_gradient(const Component& c, std::span<const double> theta, double l2,
                    std::span<double> grad) {
  for (std::size_t k = 0; k < theta.size(); ++k) grad[k] = 2.0 * l2 * theta[k];
  for (const auto& [w, l] : c.pairs) {
    const double g = neg_log_sigmoid_grad(theta[w] - theta[l]);
    grad[w] += g;
    grad[l] -= g;
  }
}

double inf_norm(std::span<const double> v) {
  double norm = 0.0;
  for (const double x : v) norm = std::max(norm, std::abs(x));
  return norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

struct ComponentFit {
  std::vector<double> theta;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

// d^2/dd^2 of -log sigma(d) = sigma(d) sigma(-d).
double neg_log_sigmoid_curvature(double d) {
  const double e = std::exp(-std::abs(d));
  return e / ((1.0 + e) * (1.0 + e));
}

// Solves H x = b in place for a symmetric positive definite H (row-major).
bool cholesky_solve(std::vector<double>& h, std::size_t n, std::span<double> b) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = h[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= h[j * n + k] * h[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    h[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = h[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= h[i * n + k] * h[j * n + k];
      h[i * n + j] = v / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= h[i * n + k] * b[k];
    b[i] = v / h[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= h[k * n + i] * b[k];
    b[i] = v / h[i * n + i];
  }
  return true;
}

// Newton direction -H^-1 g; H is the comparison-graph Laplacian weighted by
// the logistic curvature plus 2 l2 I.
bool newton_direction(const Component& c, std::span<const double> theta, double l2,
                      std::span<const double> grad, std::span<double> direction) {
  const std::size_t n = theta.size();
  std::vector<double> h(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) h[k * n + k] = 2.0 * l2;
  for (const auto& [w, l] : c.pairs) {
    const double a = neg_log_sigmoid_curvature(theta[w] - theta[l]);
    h[w * n + w] += a;
    h[l * n + l] += a;
    h[w * n + l] -= a;
    h[l * n + w] -= a;
  }
  for (std::size_t k = 0; k < n; ++k) direction[k] = -grad[k];
  return cholesky_solve(h, n, direction);
}

// Components up to this size take Newton steps; larger ones use
// Barzilai-Borwein gradient steps.
constexpr std::size_t kNewtonLimit = 256;
// Non-monotone window for the gradient path.
constexpr std::size_t kMemory = 10;

ComponentFit descend(const Component& c, const FitOptions& options) {
  const std::size_t n = c.cells.size();
  const double l2 = options.l2_strength;
  const bool newton = n <= kNewtonLimit;
  ComponentFit fit;
  fit.theta.assign(n, 0.0);
  std::vector<double> grad(n), trial(n), trial_grad(n), direction(n);

  // Initial gradient step ~ 1/L: each comparison adds curvature <= 1/4 per endpoint.
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [w, l] : c.pairs) {
    ++degree[w];
    ++degree[l];
  }
  const double max_degree = static_cast<double>(*std::max_element(degree.begin(), degree.end()));
  double step = 1.0 / (0.5 * max_degree + 2.0 * l2);

  double f = local_value(c, fit.theta, l2);
  std::vector<double> history{f};
  local_gradient(c, fit.theta, l2, grad);
  for (;;) {
    fit.gradient_norm = inf_norm(grad);
    if (fit.gradient_norm < options.tolerance) {
      fit.converged = true;
      return fit;
    }
    if (fit.iterations >= options.max_iters) return fit;
    ++fit.iterations;

    double t = step;
    if (newton && newton_direction(c, fit.theta, l2, grad, direction)) {
      t = 1.0;
    } else {
      for (std::size_t j = 0; j < n; ++j) direction[j] = -grad[j];
    }
    const double slope = dot(grad, direction);
    const double reference = *std::max_element(history.begin(), history.end());
    double f_trial = 0.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = fit.theta[j] + t * direction[j];
      f_trial = local_value(c, trial, l2);
      if (f_trial <= reference + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Rounding floor: no representable decrease left along the direction.
      return fit;
    }
    local_gradient(c, trial, l2, trial_grad);

    // Barzilai-Borwein step for the next gradient trial.
    double ss = 0.0, sy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = trial[j] - fit.theta[j];
      const double y = trial_grad[j] - grad[j];
      ss += s * s;
      sy += s * y;
    }
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : t * 2.0;

    fit.theta.swap(trial);
    grad.swap(trial_grad);
    f = f_trial;
    history.push_back(f);
    if (history.size() > kMemory) history.erase(history.begin());
  }
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kTabularNoContext: return "tabular-no-context";
    case EstimatorKind::kTabularContextAware: return "tabular-context-aware";
    case EstimatorKind::kExternalScorer: return "external-scorer";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view text) {
  if (text == "tabular-no-context") return EstimatorKind::kTabularNoContext;
  if (text == "tabular-context-aware") return EstimatorKind::kTabularContextAware;
  if (text == "external-scorer") return EstimatorKind::kExternalScorer;
  throw Error(ErrorCode::kParseError, fmt::format("unknown estimator kind '{}'", text));
}

CellKey Estimator::key(std::string_view prompt, std::optional<std::string_view> context,
                       std::string_view completion) const {
  return make_key(prompt, context, completion, context_aware());
}

double Estimator::value(std::string_view prompt, std::optional<std::string_view> context,
                        std::string_view completion) const {
  const auto it = values.find(key(prompt, context, completion));
  if (it == values.end()) {
    throw Error(ErrorCode::kUnresolvedId,
                fmt::format("estimator has no value for prompt '{}', context '{}', completion '{}'",
                            prompt, context.value_or(""), completion));
  }
  return it->second;
}

double Estimator::score(std::string_view prompt, std::optional<std::string_view> context,
                        std::string_view completion) const {
  if (context_aware() && !context && context_posterior.count(std::string(prompt)) != 0) {
    return prompt_value(prompt, completion);
  }
  const auto it = values.find(key(prompt, context, completion));
  return it == values.end() ? 0.0 : it->second;
}

double Estimator::prompt_value(std::string_view prompt, std::string_view completion) const {
  const auto row = context_posterior.find(std::string(prompt));
  if (row == context_posterior.end()) {
    throw Error(ErrorCode::kUnresolvedId,
                fmt::format("no context posterior for prompt '{}'", prompt));
  }
  double total = 0.0;
  for (std::size_t z = 0; z < contexts.size(); ++z) {
    const double weight = row->second[z];
    if (weight == 0.0) continue;
    const auto it = values.find(CellKey{std::string(prompt), contexts[z], std::string(completion)});
    total += weight * (it == values.end() ? 0.0 : it->second);
  }
  return total;
}

void Estimator::validate() const {
  for (const auto& [cell, v] : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("estimator value for '{}'/'{}'/'{}' is not finite", cell.prompt,
                              cell.context, cell.completion));
    }
  }
  for (const auto& [prompt, row] : context_posterior) {
    if (row.size() != contexts.size()) {
      throw Error(ErrorCode::kLengthMismatch,
                  fmt::format("posterior row for '{}' has {} entries for {} contexts", prompt,
                              row.size(), contexts.size()));
    }
    double sum = 0.0;
    for (const double p : row) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::kInvalidDistribution,
                    fmt::format("posterior row for '{}' has an invalid entry", prompt));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidDistribution,
                  fmt::format("posterior row for '{}' sums to {:.17g}", prompt, sum));
    }
  }
}

double bt_negative_log_likelihood(const Estimator& estimator,
                                  std::span<const PreferenceDatum> data) {
  double total = 0.0;
  for (const auto& datum : data) {
    const auto context = datum_context(datum, estimator.context_aware());
    total += neg_log_sigmoid(estimator.value(datum.prompt, context, datum.winner) -
                             estimator.value(datum.prompt, context, datum.loser));
  }
  return total;
}

BtObjective::BtObjective(std::vector<CellKey> cells, std::span<const PreferenceDatum> data,
                         bool context_aware, double l2_strength)
    : cells_(std::move(cells)), l2_(l2_strength) {
  if (!std::is_sorted(cells_.begin(), cells_.end()) ||
      std::adjacent_find(cells_.begin(), cells_.end()) != cells_.end()) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
  }
  const auto index = [&](const CellKey& key) {
    const auto it = std::lower_bound(cells_.begin(), cells_.end(), key);
    if (it == cells_.end() || *it != key) {
      throw Error(ErrorCode::kUnresolvedId,
                  fmt::format("no parameter for prompt '{}', context '{}', completion '{}'",
                              key.prompt, key.context, key.completion));
    }
    return static_cast<std::size_t>(it - cells_.begin());
  };
  pairs_.reserve(data.size());
  for (const auto& datum : data) {
    if (datum.winner == datum.loser) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("datum for prompt '{}' has winner == loser", datum.prompt));
    }
    const auto context = datum_context(datum, context_aware);
    pairs_.emplace_back(index(make_key(datum.prompt, context, datum.winner, context_aware)),
                        index(make_key(datum.prompt, context, datum.loser, context_aware)));
  }
}

std::vector<CellKey> BtObjective::cells_for(std::span<const PreferenceDatum> data,
                                            bool context_aware) {
  std::vector<CellKey> cells;
  cells.reserve(2 * data.size());
  for (const auto& datum : data) {
    const auto context = datum_context(datum, context_aware);
    cells.push_back(make_key(datum.prompt, context, datum.winner, context_aware));
    cells.push_back(make_key(datum.prompt, context, datum.loser, context_aware));
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

double BtObjective::value(std::span<const double> theta) const {
  if (theta.size() != cells_.size()) throw Error(ErrorCode::kLengthMismatch, "theta size");
  double total = 0.0;
  for (const auto& [w, l] : pairs_) total += neg_log_sigmoid(theta[w] - theta[l]);
  for (const double t : theta) total += l2_ * t * t;
  return total;
}

void BtObjective::gradient(std::span<const double> theta, std::span<double> grad) const {
  if (theta.size() != cells_.size() || grad.size() != cells_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "theta/gradient size");
  }
  for (std::size_t k = 0; k < theta.size(); ++k) grad[k] = 2.0 * l2_ * theta[k];
  for (const auto& [w, l] : pairs_) {
    const double g = neg_log_sigmoid_grad(theta[w] - theta[l]);
    grad[w] += g;
    grad[l] -= g;
  }
}

FitResult fit_tabular(std::span<const PreferenceDatum> data, const FitOptions& options) {
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "fit_tabular needs data");
  if (!(options.l2_strength > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "l2_strength must be positive");
  }
  if (!(options.tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  }
  const BtObjective objective(BtObjective::cells_for(data, options.context_aware), data,
                              options.context_aware, options.l2_strength);
  const std::size_t n = objective.size();

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& [w, l] : objective.comparisons()) {
    parent[find_root(parent, w)] = find_root(parent, l);
  }
  // Components ordered by smallest member so results never depend on hashing.
  std::vector<std::size_t> component_of(n, n);
  std::vector<Component> components;
  std::vector<std::size_t> local_index(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t root = find_root(parent, k);
    if (component_of[root] == n) {
      component_of[root] = components.size();
      components.emplace_back();
    }
    auto& c = components[component_of[root]];
    local_index[k] = c.cells.size();
    c.cells.push_back(k);
  }
  for (const auto& [w, l] : objective.comparisons()) {
    components[component_of[find_root(parent, w)]].pairs.emplace_back(local_index[w],
                                                                       local_index[l]);
  }

  FitResult result;
  result.estimator.kind = options.context_aware ? EstimatorKind::kTabularContextAware
                                                : EstimatorKind::kTabularNoContext;
  for (const auto& component : components) {
    const auto fit = descend(component, options);
    result.iterations = std::max(result.iterations, fit.iterations);
    result.gradient_norm = std::max(result.gradient_norm, fit.gradient_norm);
    if (!fit.converged) {
      throw Error(ErrorCode::kNonConvergence,
                  fmt::format("gradient norm {:.3e} above tolerance {:.3e} after {} iterations",
                              fit.gradient_norm, options.tolerance, fit.iterations));
    }
    for (std::size_t k = 0; k < component.cells.size(); ++k) {
      result.estimator.values.emplace(objective.cells()[component.cells[k]], fit.theta[k]);
    }
  }
  return result;
}

std::map<std::string, std::vector<double>> fit_context_posterior(
    std::span<const PreferenceDatum> data, std::span<const std::string> prompts,
    std::span<const std::string> contexts, double smoothing) {
  if (!(smoothing >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "smoothing must be >= 0");
  if (contexts.empty()) throw Error(ErrorCode::kInvalidArgument, "no contexts given");
  std::map<std::string, std::vector<double>> counts;
  for (const auto& prompt : prompts) counts.emplace(prompt, std::vector<double>(contexts.size(), 0.0));
  for (const auto& datum : data) {
    if (!datum.context) continue;
    const auto row = counts.find(datum.prompt);
    if (row == counts.end()) continue;
    const auto z = std::find(contexts.begin(), contexts.end(), *datum.context);
    if (z == contexts.end()) {
      throw Error(ErrorCode::kUnresolvedId, fmt::format("unknown context '{}'", *datum.context));
    }
    row->second[static_cast<std::size_t>(z - contexts.begin())] += 1.0;
  }
  for (auto& [prompt, row] : counts) {
    double total = 0.0;
    for (auto& c : row) {
      c += smoothing;
      total += c;
    }
    if (total > 0.0) {
      for (auto& c : row) c /= total;
    } else {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    }
  }
  return counts;
}

double gradient_check(const Estimator& estimator, std::span<const PreferenceDatum> data,
                      double epsilon, double l2_strength) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1e-2]");
  }
  std::vector<CellKey> cells;
  std::vector<double> theta;
  for (const auto& [cell, v] : estimator.values) {
    cells.push_back(cell);
    theta.push_back(v);
  }
  const BtObjective objective(cells, data, estimator.context_aware(), l2_strength);
  std::vector<double> analytic(theta.size());
  objective.gradient(theta, analytic);
  double worst = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + epsilon;
    const double up = objective.value(theta);
    theta[k] = saved - epsilon;
    const double down = objective.value(theta);
    theta[k] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
  }
  return worst;
}

std::string estimator_to_json(const Estimator& estimator) {
  nlohmann::ordered_json doc;
  doc["format"] = "ctxpref-estimator/1";
  doc["kind"] = to_string(estimator.kind);
  doc["contexts"] = estimator.contexts;
  auto values = nlohmann::ordered_json::array();
  for (const auto& [cell, v] : estimator.values) {
    nlohmann::ordered_json row;
    row["prompt"] = cell.prompt;
    if (!cell.context.empty()) row["context"] = cell.context;
    row["completion"] = cell.completion;
    row["value"] = v;
    values.push_back(std::move(row));
  }
  doc["values"] = std::move(values);
  auto posterior = nlohmann::ordered_json::object();
  for (const auto& [prompt, row] : estimator.context_posterior) posterior[prompt] = row;
  doc["context_posterior"] = std::move(posterior);
  return doc.dump(1) + "\n";
}

Estimator estimator_from_json(std::string_view text) {
  Estimator estimator;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "ctxpref-estimator/1") {
      throw Error(ErrorCode::kParseError, "unsupported estimator format");
    }
    estimator.kind = estimator_kind_from_string(doc.at("kind").get<std::string>());
    estimator.contexts = doc.value("contexts", std::vector<std::string>{});
    for (const auto& row : doc.at("values")) {
      CellKey key{row.at("prompt").get<std::string>(), row.value("context", std::string()),
                  row.at("completion").get<std::string>()};
      if (!estimator.values.emplace(std::move(key), row.at("value").get<double>()).second) {
        throw Error(ErrorCode::kParseError, "duplicate estimator cell");
      }
    }
    if (doc.contains("context_posterior")) {
      for (const auto& [prompt, row] : doc.at("context_posterior").items()) {
        estimator.context_posterior[prompt] = row.get<std::vector<double>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("estimator file: {}", e.what()));
  }
  estimator.validate();
  return estimator;
}

void save_estimator(const std::string& path, const Estimator& estimator) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", path));
  out << estimator_to_json(estimator);
}

Estimator load_estimator(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return estimator_from_json(buffer.str());
}

}  // namespace ctxpref::fit
