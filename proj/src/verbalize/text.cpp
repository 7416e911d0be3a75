#include <algorithm>
#include <regex>
#include <set>

#include "geoforge/verbalize.hpp"

namespace geoforge::verbalize {

using engine::Symbol;
using engine::SymbolKind;

namespace {

std::string join(const cdl::PointTuple& t) {
  std::string s;
  for (const auto& p : t) s += p;
  return s;
}

std::string shape_phrase(const cdl::PointTuple& t) {
  switch (t.size()) {
    case 3:
      return "triangle " + join(t);
    case 4:
      return "quadrilateral " + join(t);
    default:
      return "polygon " + join(t);
  }
}

std::vector<std::string> slots_of(const std::string& tmpl) {
  std::vector<std::string> out;
  static const std::regex re(R"(\{([a-z0-9]+)\})");
  for (auto it = std::sregex_iterator(tmpl.begin(), tmpl.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

std::string fill(std::string tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      auto it = slots.find(tmpl.substr(i + 1, close - i - 1));
      if (close != std::string::npos && it != slots.end()) {
        out += it->second;
        i = close + 1;
        continue;
      }
    }
    out += tmpl[i++];
  }
  return out;
}

// Picks a variant whose slots all have non-empty fillers.
std::string choose(const std::vector<std::string>& variants, const std::map<std::string, std::string>& slots,
                   Rng* rng, const std::string& key) {
  std::vector<const std::string*> usable;
  for (const auto& v : variants) {
    bool ok = true;
    for (const auto& s : slots_of(v)) {
      auto it = slots.find(s);
      if (it == slots.end() || it->second.empty()) ok = false;
    }
    if (ok) usable.push_back(&v);
  }
  if (usable.empty()) throw VerbalizeError("MissingTemplate", "no usable template for " + key);
  const std::string* pick = rng ? usable[rng->below(usable.size())] : usable.front();
  return fill(*pick, slots);
}

const std::vector<std::string>& entry(const TemplateBank::Entries& e, const std::string& key) {
  auto it = e.find(key);
  if (it == e.end() || it->second.empty()) throw VerbalizeError("MissingTemplate", "no template for " + key);
  return it->second;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string sentence(std::string s) {
  s = capitalize(std::move(s));
  if (!s.empty() && s.back() != '.' && s.back() != '?') s += '.';
  return s;
}

std::map<std::string, std::string> metric_slots(cdl::Quantity q, const cdl::PointTuple& args) {
  std::map<std::string, std::string> m;
  m["args"] = join(args);
  for (std::size_t i = 0; i < args.size(); ++i) m["a" + std::to_string(i)] = args[i];
  if (q == cdl::Quantity::PerimeterOf || q == cdl::Quantity::AreaOf) m["shape"] = shape_phrase(args);
  if (q == cdl::Quantity::LengthOfArc && args.size() == 3) {
    m["circle"] = args[0];
    m["arc"] = args[1] + args[2];
  }
  return m;
}

std::string relation_clause(const cdl::RelationFact& f, const TemplateBank& bank, Rng* rng) {
  std::map<std::string, std::string> slots;
  for (std::size_t i = 0; i < f.args.size(); ++i) slots[std::to_string(i)] = join(f.args[i]);
  const std::string key(cdl::name_of(f.predicate));
  return choose(entry(bank.predicates, key), slots, rng, key);
}

std::string coef_text(const Number& c) {
  if (c.exact() && c.den() != 1) return std::to_string(c.num()) + "/" + std::to_string(c.den());
  return c.display();
}

bool degrees(SymbolKind k) { return k == SymbolKind::Angle || k == SymbolKind::ArcMeasure; }

std::string equation_phrase(const engine::FactStore& store, const engine::Equation& e) {
  bool all_degrees = !e.terms.empty();
  for (const auto& t : e.terms) all_degrees = all_degrees && degrees(store.symbol(t.symbol).kind);
  auto constant = [&](const Number& v) { return value_text(v, all_degrees); };
  const std::string power = e.shape == engine::EquationShape::SumOfSquares ? "²" : "";

  std::vector<std::string> left, right;
  if (e.shape == engine::EquationShape::ProductRatio) {
    for (const auto& t : e.terms) {
      auto name = symbol_phrase(store.symbol(t.symbol));
      int k = static_cast<int>(std::lround(std::fabs(t.coef.value())));
      std::string term = k == 1 ? name : name + (k == 2 ? "²" : k == 3 ? "³" : "^" + std::to_string(k));
      (t.coef.sign() > 0 ? left : right).push_back(term);
    }
    auto product = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : " × ") + x;
      return s;
    };
    std::string rhs = product(right);
    if (!(e.rhs == Number(1))) rhs = rhs.empty() ? constant(e.rhs) : constant(e.rhs) + " × " + rhs;
    if (rhs.empty()) rhs = "1";
    return product(left) + " = " + rhs;
  }
  for (const auto& t : e.terms) {
    auto name = symbol_phrase(store.symbol(t.symbol)) + power;
    Number mag = t.coef.abs();
    std::string term = mag == Number(1) ? name : coef_text(mag) + " × " + name;
    (t.coef.sign() > 0 ? left : right).push_back(term);
  }
  if (e.rhs.sign() > 0) right.push_back(constant(e.rhs));
  if (e.rhs.sign() < 0) left.push_back(constant(e.rhs.abs()));
  if (left.empty()) std::swap(left, right);
  auto sum = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " + ") + x;
    return s.empty() ? std::string("0") : s;
  };
  return sum(left) + " = " + sum(right);
}

std::string list_phrase(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) s += i + 1 == items.size() ? " and " : ", ";
    s += items[i];
  }
  return s;
}

}  // namespace

// ---- bank --------------------------------------------------------------------

TemplateBank TemplateBank::from_json(const nlohmann::json& j) {
  TemplateBank b;
  auto read = [&](const char* section, Entries& into) {
    if (!j.contains(section)) return;
    for (const auto& [key, list] : j.at(section).items()) {
      for (const auto& t : list) into[key].push_back(t.get<std::string>());
    }
  };
  read("predicates", b.predicates);
  read("quantities", b.quantities);
  read("goals", b.goals);
  read("theorems", b.theorems);

  auto bad = [](const std::string& key, const std::string& t, const std::string& why) {
    throw VerbalizeError("BadTemplate", key + ": \"" + t + "\" " + why);
  };
  for (const auto& [key, list] : b.predicates) {
    auto p = cdl::predicate_from_name(key);
    if (!p) bad(key, "", "is not a catalog predicate");
    const std::size_t n = cdl::signature(*p).arity.size();
    for (const auto& t : list) {
      std::set<std::string> seen;
      for (const auto& s : slots_of(t)) {
        if (s.size() != 1 || !std::isdigit(static_cast<unsigned char>(s[0])) || static_cast<std::size_t>(s[0] - '0') >= n) {
          bad(key, t, "uses unknown slot {" + s + "}");
        }
        seen.insert(s);
      }
      if (seen.size() != n) bad(key, t, "leaves an argument out");
    }
  }
  auto check_metric = [&](const Entries& e, bool with_value) {
    for (const auto& [key, list] : e) {
      auto q = cdl::quantity_from_name(key);
      if (!q) bad(key, "", "is not a catalog quantity");
      const auto& arity = cdl::signature(*q).arity;
      const int n = arity.front();  // 0: any number of points
      for (const auto& t : list) {
        std::set<int> covered;
        bool whole = false, value = false;
        for (const auto& s : slots_of(t)) {
          if (s == "args" || s == "shape") {
            whole = true;
          } else if (s == "value" && with_value) {
            value = true;
          } else if (s == "arc" && *q == cdl::Quantity::LengthOfArc) {
            covered.insert({1, 2});
          } else if (s == "circle" && *q == cdl::Quantity::LengthOfArc) {
            covered.insert(0);
          } else if (s.size() == 2 && s[0] == 'a' && std::isdigit(static_cast<unsigned char>(s[1])) && s[1] - '0' < n) {
            covered.insert(s[1] - '0');
          } else {
            bad(key, t, "uses unknown slot {" + s + "}");
          }
        }
        if (!whole && (n == 0 || static_cast<int>(covered.size()) != n)) bad(key, t, "leaves an argument out");
        if (with_value && !value) bad(key, t, "has no {value}");
      }
    }
  };
  check_metric(b.quantities, true);
  check_metric(b.goals, false);
  for (const auto& [key, list] : b.theorems) {
    for (const auto& t : list) {
      bool conclusion = false;
      for (const auto& s : slots_of(t)) {
        if (s == "conclusion") {
          conclusion = true;
        } else if (s != "points" && s != "premises" && s != "relation") {
          bad(key, t, "uses unknown slot {" + s + "}");
        }
      }
      if (!conclusion) bad(key, t, "has no {conclusion}");
    }
  }
  return b;
}

const TemplateBank& TemplateBank::builtin() {
  static const TemplateBank bank = [] {
    auto b = from_json(nlohmann::json::parse(embedded_template_bank()));
    auto missing = b.gaps();
    if (!missing.empty()) throw VerbalizeError("MissingTemplate", "template bank lacks " + missing.front());
    return b;
  }();
  return bank;
}

std::vector<std::string> TemplateBank::gaps() const {
  std::vector<std::string> out;
  auto need = [&](const Entries& e, const std::string& key, const std::string& section) {
    auto it = e.find(key);
    if (it == e.end() || it->second.empty()) out.push_back(section + "." + key);
  };
  for (auto p : cdl::all_predicates()) need(predicates, std::string(cdl::name_of(p)), "predicates");
  for (auto q : cdl::all_quantities()) {
    need(quantities, std::string(cdl::name_of(q)), "quantities");
    need(goals, std::string(cdl::name_of(q)), "goals");
  }
  for (const auto& id : engine::theorem_ids()) need(theorems, id, "theorems");
  return out;
}

// ---- phrases -----------------------------------------------------------------

std::string value_text(const Number& v, bool deg) { return v.display() + (deg ? "°" : ""); }

std::string answer_sentence(const Number& v, bool deg) { return "The answer is " + value_text(v, deg) + "."; }

std::string symbol_phrase(const Symbol& s) {
  const auto& a = s.args;
  switch (s.kind) {
    case SymbolKind::Length:
      return join(a);
    case SymbolKind::Angle:
      return "∠" + join(a);
    case SymbolKind::ArcMeasure:
      return "arc " + a[1] + a[2];
    case SymbolKind::ArcLength:
      return "the length of arc " + a[1] + a[2];
    case SymbolKind::Radius:
      return "the radius of circle " + a[0];
    case SymbolKind::Diameter:
      return "the diameter of circle " + a[0];
    case SymbolKind::Perimeter:
      return "the perimeter of " + shape_phrase(a);
    case SymbolKind::Area:
      return "the area of " + shape_phrase(a);
  }
  return join(a);
}

std::string fact_phrase(const engine::FactStore& store, int fact_id) {
  const auto& body = store.fact(fact_id).body;
  if (const auto* v = std::get_if<engine::ValueFact>(&body)) {
    const auto& s = store.symbol(v->symbol);
    return symbol_phrase(s) + " = " + value_text(v->value, degrees(s.kind));
  }
  if (const auto* e = std::get_if<engine::Equation>(&body)) return equation_phrase(store, *e);
  if (const auto* r = std::get_if<cdl::RelationFact>(&body)) return relation_clause(*r, TemplateBank::builtin(), nullptr);
  return cdl::print_statement(std::get<cdl::ConstructionFact>(body));
}

// ---- question and solution -------------------------------------------------------

std::string verbalize_problem(const cdl::FormalProblem& p, const TemplateBank& bank, Rng& rng) {
  std::vector<std::string> clauses;
  for (const auto& f : p.text_facts) {
    if (const auto* r = std::get_if<cdl::RelationFact>(&f)) {
      clauses.push_back(relation_clause(*r, bank, &rng));
    } else {
      const auto& m = std::get<cdl::MetricFact>(f);
      auto slots = metric_slots(m.quantity, m.args);
      slots["value"] = value_text(m.value, cdl::is_angle(m.quantity));
      const std::string key(cdl::name_of(m.quantity));
      clauses.push_back(choose(entry(bank.quantities, key), slots, &rng, key));
    }
  }
  if (!p.goal) throw VerbalizeError("MissingTemplate", "problem has no goal");
  const std::string key(cdl::name_of(p.goal->quantity));
  clauses.push_back(choose(entry(bank.goals, key), metric_slots(p.goal->quantity, p.goal->args), &rng, key));

  std::string out = "As shown in the figure, ";
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    auto s = sentence(clauses[i]);
    if (i == 0 && s.size() > 1 && s[0] >= 'A' && s[0] <= 'Z' && s[1] >= 'a' && s[1] <= 'z') {
      s[0] = static_cast<char>(s[0] - 'A' + 'a');
    }
    out += (i == 0 ? "" : " ") + s;
  }
  return out;
}

std::string verbalize_solution(const engine::DeductionResult& r, const std::vector<int>& steps,
                               const TemplateBank& bank, Rng* rng) {
  if (steps.empty()) throw VerbalizeError("EmptyTrace", "a solution needs at least one step");
  const auto& store = r.store;
  std::string out;
  for (int i : steps) {
    const auto& st = r.trace.at(static_cast<std::size_t>(i));
    std::vector<std::string> premises, relations;
    for (int q : st.premises) {
      const auto& body = store.fact(q).body;
      if (std::holds_alternative<cdl::ConstructionFact>(body)) continue;
      (std::holds_alternative<cdl::RelationFact>(body) ? relations : premises).push_back(fact_phrase(store, q));
    }
    std::map<std::string, std::string> slots{{"points", join(st.binding)},
                                             {"conclusion", fact_phrase(store, st.conclusion)},
                                             {"premises", list_phrase(premises)},
                                             {"relation", list_phrase(relations)}};
    out += sentence(choose(entry(bank.theorems, st.theorem), slots, rng, st.theorem)) + " ";
  }
  const auto& last = r.trace.at(static_cast<std::size_t>(steps.back()));
  const auto& body = store.fact(last.conclusion).body;
  const auto* v = std::get_if<engine::ValueFact>(&body);
  if (!v) throw VerbalizeError("EmptyTrace", "the last step does not determine a value");
  out += answer_sentence(v->value, degrees(store.symbol(v->symbol).kind));
  return out;
}

}  // namespace geoforge::verbalize
