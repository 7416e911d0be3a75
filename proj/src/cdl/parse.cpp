#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "geoforge/cdl.hpp"

namespace geoforge::cdl {
namespace {

[[noreturn]] void fail(std::string code, std::string message) { throw CdlError{std::move(code), std::move(message)}; }

std::string strip_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

bool is_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

// "Name(body)" -> {Name, body}; the closing parenthesis must end the text.
std::pair<std::string_view, std::string_view> split_call(std::string_view text) {
  auto open = text.find('(');
  if (open == std::string_view::npos || open == 0) fail("SyntaxError", "expected Name(...)");
  if (text.back() != ')') fail("SyntaxError", "missing closing parenthesis");
  std::string_view name = text.substr(0, open);
  if (!is_name(name)) fail("SyntaxError", "malformed name '" + std::string(name) + "'");
  std::string_view body = text.substr(open + 1, text.size() - open - 2);
  int depth = 0;
  for (char c : body) {
    if (c == '(') ++depth;
    if (c == ')' && --depth < 0) fail("SyntaxError", "unbalanced parentheses");
  }
  if (depth != 0) fail("SyntaxError", "unbalanced parentheses");
  return {name, body};
}

// Splits on top-level commas.
std::vector<std::string_view> split_args(std::string_view body) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '(') ++depth;
    if (body[i] == ')') --depth;
    if (body[i] == ',' && depth == 0) {
      out.push_back(body.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(body.substr(start));
  for (auto a : out) {
    if (a.empty()) fail("SyntaxError", "empty argument");
  }
  return out;
}

void check_arity(const Signature& sig, const std::vector<PointTuple>& args) {
  if (args.size() != sig.arity.size()) {
    std::ostringstream msg;
    msg << sig.name << " takes " << sig.arity.size() << " argument(s), got " << args.size();
    fail("ArityMismatch", msg.str());
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    int want = sig.arity[i];
    auto got = static_cast<int>(args[i].size());
    if ((want == 0 && got < 3) || (want > 0 && got != want)) {
      std::ostringstream msg;
      msg << sig.name << " argument " << i + 1 << " needs " << (want == 0 ? std::string(">= 3") : std::to_string(want))
          << " point(s), got " << got;
      fail("ArityMismatch", msg.str());
    }
  }
}

std::pair<Quantity, PointTuple> parse_head(std::string_view text) {
  auto [name, body] = split_call(text);
  auto q = quantity_from_name(name);
  if (!q) fail("UnknownPredicate", "unknown quantity '" + std::string(name) + "'");
  auto parts = split_args(body);
  std::vector<PointTuple> args;
  for (auto part : parts) args.push_back(split_points(part));
  check_arity(signature(*q), args);
  return {*q, args.front()};
}

ConstructionFact parse_construction(ConstructionKind kind, std::string_view body) {
  ConstructionFact f{kind, {}};
  for (auto part : split_args(body)) f.args.push_back(split_points(part));
  switch (kind) {
    case ConstructionKind::Shape: {
      for (const auto& e : f.args) {
        if (e.size() != 2) fail("ArityMismatch", "Shape edges have exactly 2 points");
        if (e[0] == e[1]) fail("SyntaxError", "degenerate edge " + e[0] + e[1]);
      }
      for (std::size_t i = 0; i < f.args.size(); ++i) {
        const auto& next = f.args[(i + 1) % f.args.size()];
        if (f.args[i][1] != next[0]) fail("SyntaxError", "edge chain not closed");
      }
      if (f.args.size() < 3) fail("ArityMismatch", "Shape needs at least 3 edges");
      std::set<PointLabel> seen;
      for (const auto& e : f.args) {
        if (!seen.insert(e[0]).second) fail("SyntaxError", "edge chain revisits point " + e[0]);
      }
      break;
    }
    case ConstructionKind::Collinear: {
      if (f.args.size() != 1 || f.args[0].size() < 3) fail("ArityMismatch", "Collinear takes one list of >= 3 points");
      std::set<PointLabel> seen(f.args[0].begin(), f.args[0].end());
      if (seen.size() != f.args[0].size()) fail("SyntaxError", "Collinear repeats a point");
      break;
    }
    case ConstructionKind::Cocircular: {
      if (f.args.size() != 2 || f.args[0].size() != 1 || f.args[1].empty()) {
        fail("ArityMismatch", "Cocircular takes a centre and >= 1 point");
      }
      std::set<PointLabel> seen(f.args[1].begin(), f.args[1].end());
      if (seen.size() != f.args[1].size() || seen.count(f.args[0][0])) fail("SyntaxError", "Cocircular repeats a point");
      break;
    }
  }
  return f;
}

}  // namespace

PointTuple split_points(std::string_view text) {
  PointTuple out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c < 'A' || c > 'Z') fail("SyntaxError", "bad point label in '" + std::string(text) + "'");
    std::size_t j = i + 1;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  if (out.empty()) fail("SyntaxError", "empty point list");
  return out;
}

Statement parse_statement(std::string_view raw) {
  std::string text = strip_spaces(raw);
  if (text.empty()) fail("SyntaxError", "empty statement");
  auto [name, body] = split_call(text);
  if (name == "Shape") return parse_construction(ConstructionKind::Shape, body);
  if (name == "Collinear") return parse_construction(ConstructionKind::Collinear, body);
  if (name == "Cocircular") return parse_construction(ConstructionKind::Cocircular, body);
  if (name == "Value") {
    auto [q, args] = parse_head(body);
    return Goal{q, std::move(args)};
  }
  if (name == "Equal") {
    auto parts = split_args(body);
    if (parts.size() != 2) fail("ArityMismatch", "Equal takes a quantity and a value");
    auto [q, args] = parse_head(parts[0]);
    auto value = Number::parse(parts[1]);
    if (!value) {
      if (parts[1].find('(') != std::string_view::npos) {
        fail("SyntaxError", "Equal between two quantities is not supported; give a numeric value");
      }
      fail("SyntaxError", "malformed value '" + std::string(parts[1]) + "'");
    }
    return StatementFact{MetricFact{q, std::move(args), *value}};
  }
  auto p = predicate_from_name(name);
  if (!p) fail("UnknownPredicate", "unknown predicate '" + std::string(name) + "'");
  RelationFact f{*p, {}};
  for (auto part : split_args(body)) f.args.push_back(split_points(part));
  check_arity(signature(*p), f.args);
  return StatementFact{std::move(f)};
}

namespace {

// Places one statement into the problem; throws CdlError on misuse.
void place(FormalProblem& p, const Statement& s, std::optional<Channel> channel) {
  if (const auto* c = std::get_if<ConstructionFact>(&s)) {
    if (channel) fail("SyntaxError", "channel prefix applies only to relation and metric facts");
    p.constructions.push_back(*c);
  } else if (const auto* g = std::get_if<Goal>(&s)) {
    if (channel) fail("SyntaxError", "channel prefix applies only to relation and metric facts");
    if (p.goal) fail("SyntaxError", "more than one goal");
    p.goal = *g;
  } else {
    const auto& f = std::get<StatementFact>(s);
    if (channel == Channel::Image) {
      p.image_facts.push_back(f);
    } else {
      p.text_facts.push_back(f);
    }
  }
}

}  // namespace

ParseResult parse_problem(std::string_view source, std::string id) {
  ParseResult result;
  result.problem.id = std::move(id);
  if (strip_spaces(source).empty()) {
    result.diagnostics.push_back({0, "SyntaxError", "empty source"});
    return result;
  }
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    auto end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = source.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::string text = strip_spaces(line);
    if (text.empty()) continue;
    std::optional<Channel> channel;
    if (text.rfind("image:", 0) == 0) {
      channel = Channel::Image;
      text.erase(0, 6);
    } else if (text.rfind("text:", 0) == 0) {
      channel = Channel::Text;
      text.erase(0, 5);
    }
    try {
      place(result.problem, parse_statement(text), channel);
    } catch (const CdlError& e) {
      result.diagnostics.push_back({line_no, e.code, e.message});
    }
    if (end == source.size()) break;
  }
  return result;
}

ParseResult parse_problem_json(const nlohmann::json& object, std::string fallback_id) {
  ParseResult result;
  auto& p = result.problem;
  p.id = std::move(fallback_id);
  if (!object.is_object()) {
    result.diagnostics.push_back({0, "SyntaxError", "seed is not a JSON object"});
    return result;
  }
  for (const char* key : {"problem_id", "id"}) {
    if (auto it = object.find(key); it != object.end()) {
      p.id = it->is_string() ? it->get<std::string>() : it->dump();
      break;
    }
  }
  int line_no = 0;
  auto section = [&](const char* key, auto&& accept) {
    auto it = object.find(key);
    if (it == object.end() || it->is_null()) return;
    std::vector<nlohmann::json> items;
    if (it->is_array()) {
      items.assign(it->begin(), it->end());
    } else {
      items.push_back(*it);
    }
    for (const auto& item : items) {
      ++line_no;
      if (!item.is_string()) {
        result.diagnostics.push_back({line_no, "SyntaxError", std::string(key) + " entries must be strings"});
        continue;
      }
      try {
        accept(parse_statement(item.get<std::string>()));
      } catch (const CdlError& e) {
        result.diagnostics.push_back({line_no, e.code, std::string(key) + ": " + e.message});
      }
    }
  };
  section("construction_cdl", [&](const Statement& s) {
    if (!std::holds_alternative<ConstructionFact>(s)) fail("SyntaxError", "expected Shape, Collinear or Cocircular");
    place(p, s, std::nullopt);
  });
  section("text_cdl", [&](const Statement& s) {
    if (!std::holds_alternative<StatementFact>(s)) fail("SyntaxError", "expected a relation or metric fact");
    place(p, s, Channel::Text);
  });
  section("image_cdl", [&](const Statement& s) {
    if (!std::holds_alternative<StatementFact>(s)) fail("SyntaxError", "expected a relation or metric fact");
    place(p, s, Channel::Image);
  });
  section("goal_cdl", [&](const Statement& s) {
    if (!std::holds_alternative<Goal>(s)) fail("SyntaxError", "expected Value(...)");
    place(p, s, std::nullopt);
  });
  if (line_no == 0) result.diagnostics.push_back({0, "SyntaxError", "seed has no CDL statements"});
  return result;
}

}  // namespace geoforge::cdl
