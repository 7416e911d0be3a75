#pragma once

// Natural-language question and solution text from a formal problem and its
// derivation, plus answer extraction and an optional HTTP rewriter.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geoforge/cdl.hpp"
#include "geoforge/engine.hpp"
#include "geoforge/rng.hpp"

namespace geoforge::verbalize {

struct VerbalizeError : std::runtime_error {
  std::string kind;  // MissingTemplate | BadTemplate | EmptyTrace
  VerbalizeError(std::string k, const std::string& what) : std::runtime_error(what), kind(std::move(k)) {}
};

// Templates keyed by predicate, quantity or theorem id. Slots:
//   predicates  {0} {1} ...         one per argument tuple
//   quantities  {args} {value}      plus {a0} {a1} ..., {shape}, {arc}, {circle}
//   goals       as quantities, without {value}
//   theorems    {conclusion}        plus {points}, {premises}, {relation}
struct TemplateBank {
  using Entries = std::map<std::string, std::vector<std::string>>;
  Entries predicates, quantities, goals, theorems;

  // Throws VerbalizeError(BadTemplate) on unknown slots, or entries that
  // leave an argument out.
  static TemplateBank from_json(const nlohmann::json& j);
  // The bank compiled into the binary.
  static const TemplateBank& builtin();

  // Catalog predicates, quantities and theorem ids without a template.
  std::vector<std::string> gaps() const;
};

std::string_view embedded_template_bank();

// "As shown in the figure, ..." with one clause per text-channel fact and a
// closing request for the goal. Throws VerbalizeError(MissingTemplate).
std::string verbalize_problem(const cdl::FormalProblem& p, const TemplateBank& bank, Rng& rng);

// One sentence per step in order, then "The answer is <value>.". Variants are
// drawn from rng when given, otherwise the first is used. Throws
// VerbalizeError(EmptyTrace | MissingTemplate).
std::string verbalize_solution(const engine::DeductionResult& r, const std::vector<int>& steps,
                               const TemplateBank& bank, Rng* rng = nullptr);

// Reading of symbols, facts and values as they appear in the text.
std::string symbol_phrase(const engine::Symbol& s);
std::string fact_phrase(const engine::FactStore& store, int fact_id);
std::string value_text(const Number& v, bool degrees);
std::string answer_sentence(const Number& v, bool degrees);

// Last numeric token of a text: integers, decimals, a/b, k√m (also \sqrt{m}
// and sqrt(m)), with an optional trailing degree sign. Digits glued to a
// point label (A1) are not numbers.
std::optional<double> extract_answer(std::string_view text);
// |extracted - expected| <= max(1e-4, 1e-3 |expected|); false when nothing
// can be extracted.
bool verify_answer(std::string_view text, double expected);

// Every numeric token of a text, in order.
std::vector<double> numeric_tokens(std::string_view text);

// ---- rewriter ----------------------------------------------------------------

struct RewriterConfig {
  std::string url;  // http://host:port/path
  std::string model;
  std::string api_key_env = "GEOFORGE_REWRITER_KEY";
  double timeout_seconds = 30.0;
  int retries = 1;
};

struct RewriteOutcome {
  std::string text;
  bool rewriter_used = false;
  std::string diagnostic;  // why the template text was kept
};

std::string rewrite_prompt(const std::string& problem, const std::string& hint);

// Sends {prompt[, model]} and reads {text}. Any failure, or no config, keeps
// the hint.
RewriteOutcome rewrite(const std::string& problem, const std::string& hint, const RewriterConfig* config);

}  // namespace geoforge::verbalize
