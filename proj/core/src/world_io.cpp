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

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "ctxpref/error.hpp"
#include "ctxpref/world.hpp"

// World file layout:
//
//   format: ctxpref-world/1
//   intents: i0 i1 ...
//   prompts: x0 ...
//   completions: y0 y1 ...
//   completion_prompt: x0 x0 ...      (owner prompt of each completion)
//   contexts: z0 z1 ...
//   cell z0: i0 ...                   (one line per context)
//   intent_prior: 0.5 0.5
//   prompt_given_intent:              (one row per intent, in order)
//   i0: 1 0
//   utility:                          (one row per intent, in order)
//   i0: 1.5 -0.5 ...
//
// '#' starts a comment. Errors name the line, the character column and,
// inside tables, the (row, column) coordinates.

namespace ctxpref {
namespace {

constexpr std::string_view kFormat = "ctxpref-world/1";

struct Token {
  std::string text;
  std::size_t column = 0;  // 1-based character column
};

struct Line {
  std::size_t number = 0;
  std::vector<Token> key;     // words before ':'
  std::vector<Token> values;  // words after ':'
  bool has_colon = false;
};

[[noreturn]] void fail(std::size_t line, std::size_t column, const std::string& message) {
  throw Error(ErrorCode::kParseError, fmt::format("line {}, column {}: {}", line, column, message));
}

std::vector<Token> split_words(const std::string& text, std::size_t offset) {
  std::vector<Token> tokens;
  std::size_t k = 0;
  while (k < text.size()) {
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    if (k >= text.size()) break;
    const std::size_t start = k;
    while (k < text.size() && !std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    tokens.push_back({text.substr(start, k - start), offset + start + 1});
  }
  return tokens;
}

std::vector<Line> tokenize(std::istream& in) {
  std::vector<Line> lines;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    Line line;
    line.number = number;
    if (const auto colon = raw.find(':'); colon != std::string::npos) {
      line.has_colon = true;
      line.key = split_words(raw.substr(0, colon), 0);
      line.values = split_words(raw.substr(colon + 1), colon + 1);
    } else {
      line.key = split_words(raw, 0);
    }
    if (line.key.empty() && line.values.empty()) continue;
    if (!line.has_colon) fail(number, line.key.front().column, "expected 'key: values'");
    if (line.key.empty()) fail(number, 1, "missing key before ':'");
    lines.push_back(std::move(line));
  }
  return lines;
}

double parse_number(const Token& token, std::size_t line, const std::string& where) {
  double value = 0.0;
  const char* first = token.text.data();
  const char* last = first + token.text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    fail(line, token.column, fmt::format("{}: '{}' is not a number", where, token.text));
  }
  if (!std::isfinite(value)) fail(line, token.column, fmt::format("{}: value is not finite", where));
  return value;
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

class Parser {
 public:
  explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  World parse() {
    WorldSpec spec;
    expect_format();
    spec.intents = names("intents");
    spec.prompts = names("prompts");
    spec.completions = names("completions");
    const auto intent_index = index_of(spec.intents);
    const auto prompt_index = index_of(spec.prompts);

    const Line& owners = expect("completion_prompt");
    if (owners.values.size() != spec.completions.size()) {
      fail(owners.number, owners.key.front().column,
           fmt::format("completion_prompt has {} entries for {} completions",
                       owners.values.size(), spec.completions.size()));
    }
    for (const auto& token : owners.values) {
      spec.completion_prompt.push_back(lookup(prompt_index, token, owners.number, "prompt"));
    }

    spec.contexts = names("contexts");
    std::vector<int> covered(spec.intents.size(), 0);
    for (std::size_t z = 0; z < spec.contexts.size(); ++z) {
      const Line& line = next_line("cell");
      if (line.key.size() != 2 || line.key[0].text != "cell" ||
          line.key[1].text != spec.contexts[z]) {
        fail(line.number, line.key.front().column,
             fmt::format("expected 'cell {}:'", spec.contexts[z]));
      }
      if (line.values.empty()) fail(line.number, line.key[1].column, "context cell is empty");
      std::vector<std::size_t> cell;
      for (const auto& token : line.values) {
        const std::size_t i = lookup(intent_index, token, line.number, "intent");
        if (++covered[i] > 1) {
          fail(line.number, token.column,
               fmt::format("intent '{}' already belongs to another context", token.text));
        }
        cell.push_back(i);
      }
      spec.context_cells.push_back(std::move(cell));
    }
    for (std::size_t i = 0; i < covered.size(); ++i) {
      if (covered[i] == 0) {
        fail(last_number(), 1, fmt::format("intent '{}' is not covered by any context",
                                           spec.intents[i]));
      }
    }

    const Line& prior = expect("intent_prior");
    spec.intent_prior = row_values(prior, spec.intents.size(), "intent_prior", std::nullopt);
    check_distribution(prior, spec.intent_prior, "intent_prior", std::nullopt);

    spec.prompt_given_intent =
        table("prompt_given_intent", spec.intents, spec.prompts.size(), true);
    spec.utility = table("utility", spec.intents, spec.completions.size(), false);
    if (pos_ < lines_.size()) {
      const Line& extra = lines_[pos_];
      fail(extra.number, extra.key.front().column,
           fmt::format("unexpected key '{}'", extra.key.front().text));
    }
    return World::create(std::move(spec));
  }

 private:
  static std::unordered_map<std::string, std::size_t> index_of(
      const std::vector<std::string>& names) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < names.size(); ++k) index.emplace(names[k], k);
    return index;
  }

  static std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index,
                            const Token& token, std::size_t line, std::string_view what) {
    const auto it = index.find(token.text);
    if (it == index.end()) fail(line, token.column, fmt::format("unknown {} '{}'", what, token.text));
    return it->second;
  }

  std::size_t last_number() const { return lines_.empty() ? 1 : lines_.back().number; }

  const Line& next_line(std::string_view expected) {
    if (pos_ >= lines_.size()) {
      fail(last_number() + 1, 1, fmt::format("unexpected end of file, expected '{}'", expected));
    }
    return lines_[pos_++];
  }

  const Line& expect(std::string_view key) {
    const Line& line = next_line(key);
    if (line.key.size() != 1 || line.key[0].text != key) {
      fail(line.number, line.key.front().column,
           fmt::format("expected '{}:', found '{}'", key, line.key.front().text));
    }
    return line;
  }

  void expect_format() {
    const Line& line = expect("format");
    if (line.values.size() != 1 || line.values[0].text != kFormat) {
      fail(line.number, line.key.front().column,
           fmt::format("unsupported format, expected '{}'", kFormat));
    }
  }

  std::vector<std::string> names(std::string_view key) {
    const Line& line = expect(key);
    std::vector<std::string> result;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& token : line.values) {
      if (!seen.emplace(token.text, result.size()).second) {
        fail(line.number, token.column, fmt::format("duplicate name '{}'", token.text));
      }
      result.push_back(token.text);
    }
    if (result.empty()) fail(line.number, line.key.front().column, fmt::format("no {} listed", key));
    return result;
  }

  std::vector<double> row_values(const Line& line, std::size_t expected, std::string_view table,
                                 std::optional<std::size_t> row) {
    if (line.values.size() != expected) {
      fail(line.number, line.key.front().column,
           fmt::format("{}{} has {} values, expected {}", table,
                       row ? fmt::format(" row {}", *row + 1) : std::string(),
                       line.values.size(), expected));
    }
    std::vector<double> values;
    values.reserve(expected);
    for (std::size_t c = 0; c < expected; ++c) {
      const std::string where =
          row ? fmt::format("{} (row {}, column {})", table, *row + 1, c + 1)
              : fmt::format("{} (column {})", table, c + 1);
      values.push_back(parse_number(line.values[c], line.number, where));
    }
    return values;
  }

  void check_distribution(const Line& line, std::span<const double> values,
                          std::string_view table, std::optional<std::size_t> row) {
    double sum = 0.0;
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (values[c] < 0.0) {
        fail(line.number, line.values[c].column,
             row ? fmt::format("{} (row {}, column {}): probability is negative", table,
                               *row + 1, c + 1)
                 : fmt::format("{} (column {}): probability is negative", table, c + 1));
      }
      sum += values[c];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      fail(line.number, line.key.front().column,
           row ? fmt::format("{} (row {}): probabilities sum to {:.17g}", table, *row + 1, sum)
               : fmt::format("{}: probabilities sum to {:.17g}", table, sum));
    }
  }

  Table table(std::string_view key, const std::vector<std::string>& row_names, std::size_t cols,
              bool stochastic) {
    const Line& header = expect(key);
    if (!header.values.empty()) {
      fail(header.number, header.values.front().column,
           fmt::format("'{}:' must be followed by one row per line", key));
    }
    Table result(row_names.size(), cols);
    for (std::size_t r = 0; r < row_names.size(); ++r) {
      const Line& line = next_line(row_names[r]);
      if (line.key.size() != 1 || line.key[0].text != row_names[r]) {
        fail(line.number, line.key.front().column,
             fmt::format("{} row {}: expected label '{}'", key, r + 1, row_names[r]));
      }
      const auto values = row_values(line, cols, key, r);
      if (stochastic) check_distribution(line, values, key, r);
      std::copy(values.begin(), values.end(), result.data.begin() + r * cols);
    }
    return result;
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

void write_names(std::ostream& out, std::string_view key, const std::vector<std::string>& names) {
  out << key << ':';
  for (const auto& name : names) out << ' ' << name;
  out << '\n';
}

void write_row(std::ostream& out, std::string_view label, std::span<const double> values) {
  out << label << ':';
  for (const double v : values) out << ' ' << format_number(v);
  out << '\n';
}

}  // namespace

void write_world(std::ostream& out, const World& world) {
  const auto& spec = world.spec();
  out << "format: " << kFormat << '\n';
  write_names(out, "intents", spec.intents);
  write_names(out, "prompts", spec.prompts);
  write_names(out, "completions", spec.completions);
  out << "completion_prompt:";
  for (const auto owner : spec.completion_prompt) out << ' ' << spec.prompts[owner];
  out << '\n';
  write_names(out, "contexts", spec.contexts);
  for (std::size_t z = 0; z < spec.contexts.size(); ++z) {
    out << "cell " << spec.contexts[z] << ':';
    for (const auto i : spec.context_cells[z]) out << ' ' << spec.intents[i];
    out << '\n';
  }
  write_row(out, "intent_prior", spec.intent_prior);
  out << "prompt_given_intent:\n";
  for (std::size_t i = 0; i < spec.intents.size(); ++i) {
    write_row(out, spec.intents[i], spec.prompt_given_intent.row(i));
  }
  out << "utility:\n";
  for (std::size_t i = 0; i < spec.intents.size(); ++i) {
    write_row(out, spec.intents[i], spec.utility.row(i));
  }
}

World read_world(std::istream& in) { return Parser(tokenize(in)).parse(); }

World load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open world file '{}'", path));
  return read_world(in);
}

void save_world(const std::string& path, const World& world) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write world file '{}'", path));
  write_world(out, world);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("write to '{}' failed", path));
}

}  // namespace ctxpref
