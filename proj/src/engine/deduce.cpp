#include <algorithm>
#include <bit>
#include <set>
#include <sstream>

#include "geoforge/engine.hpp"

namespace geoforge::engine {
namespace {

using Clock = std::chrono::steady_clock;

bool computing(const std::string& theorem) {
  return theorem == "law_of_cosines" || theorem == "law_of_sines" || theorem == "heron_area" ||
         theorem == "central_angle";
}

// A single-symbol linear equation is a value.
std::variant<cdl::RelationFact, Equation, ValueFact> settle(std::variant<cdl::RelationFact, Equation, ValueFact> c) {
  if (auto* e = std::get_if<Equation>(&c)) {
    Equation n = e->normalized();
    if (n.shape == EquationShape::Linear && n.terms.size() == 1) return ValueFact{n.terms[0].symbol, n.rhs};
    return n;
  }
  return c;
}

std::string conclusion_key(const FactStore& store, const std::variant<cdl::RelationFact, Equation, ValueFact>& c) {
  if (const auto* r = std::get_if<cdl::RelationFact>(&c)) return "R" + cdl::relation_key(*r);
  if (const auto* e = std::get_if<Equation>(&c)) return "E" + e->key();
  const auto& v = std::get<ValueFact>(c);
  return "V" + symbol_text(store.symbol(v.symbol));
}

bool already_known(const FactStore& store, const std::variant<cdl::RelationFact, Equation, ValueFact>& c) {
  if (const auto* r = std::get_if<cdl::RelationFact>(&c)) return store.relation_id(*r).has_value();
  if (const auto* e = std::get_if<Equation>(&c)) return e->terms.empty() || store.equation_id(*e).has_value();
  return store.determined(std::get<ValueFact>(c).symbol);
}

bool identical(const Number& a, const Number& b) {
  if (a.exact() != b.exact()) return false;
  if (a.exact()) return a.num() == b.num() && a.den() == b.den();
  return std::bit_cast<std::uint64_t>(a.value()) == std::bit_cast<std::uint64_t>(b.value());
}

std::string value_text(const FactStore& store, const ValueFact& v) {
  return symbol_text(store.symbol(v.symbol)) + " = " + v.value.to_string();
}

}  // namespace

int DeductionResult::step_of(int symbol) const {
  auto f = store.value_fact(symbol);
  return f ? store.fact(*f).step : -1;
}

std::vector<Application> match_theorem(const TheoremRule& rule, Context& ctx) {
  std::vector<Application> raw, out;
  rule.match(ctx, raw);
  std::set<std::string> seen;
  for (auto& app : raw) {
    app.conclusion = settle(std::move(app.conclusion));
    if (already_known(ctx.store, app.conclusion)) {
      // A value already known stays in the list so deduce can check it.
      if (!std::holds_alternative<ValueFact>(app.conclusion)) continue;
    }
    std::string key = app.theorem + "|" + conclusion_key(ctx.store, app.conclusion);
    if (!seen.insert(key).second) continue;
    out.push_back(std::move(app));
  }
  return out;
}

DeductionResult deduce(const cdl::FormalProblem& p, const DeductionBudget& budget) {
  const auto start = Clock::now();
  auto out_of_time = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count() > budget.timeout_seconds;
  };
  DeductionResult r;
  auto& store = r.store;
  auto fail = [&](std::string why) {
    if (!r.inconsistency) r.inconsistency = std::move(why);
  };

  std::vector<std::pair<cdl::ConstructionFact, int>> constructions;
  for (const auto& c : p.constructions) constructions.emplace_back(c, store.add(c, -1).first);
  std::vector<std::pair<cdl::RelationFact, int>> relations;
  for (const auto& rel : cdl::relation_facts(p)) relations.emplace_back(rel, store.add(rel, -1).first);
  r.figure = Figure::build(constructions, relations);

  for (const auto& m : cdl::metric_facts(p)) {
    auto sym = symbol_for(r.figure, m.quantity, m.args);
    if (!sym) {
      fail(cdl::print_statement(m) + " names no measurable quantity");
      continue;
    }
    int id = store.intern(*sym);
    if (auto known = store.value(id)) {
      if (!approx_equal(*known, m.value, 1e-6)) fail("conflicting statement values for " + symbol_text(*sym));
      continue;
    }
    store.add(ValueFact{id, m.value}, -1);
  }
  if (p.goal) {
    if (auto sym = symbol_for(r.figure, p.goal->quantity, p.goal->args)) r.goal_symbol = store.intern(*sym);
  }

  Context ctx{r.figure, store};
  const auto& library = theorem_library();
  std::set<std::string> applied;
  for (int round = 1; round <= budget.max_rounds && !r.inconsistency; ++round) {
    if (out_of_time()) {
      r.timed_out = true;
      break;
    }
    std::vector<Application> apps;
    for (const auto& rule : library) {
      auto found = match_theorem(rule, ctx);
      apps.insert(apps.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
    bool progress = false;
    for (auto& app : apps) {
      std::string key = app.theorem + "|" + conclusion_key(store, app.conclusion);
      if (auto* v = std::get_if<ValueFact>(&app.conclusion)) {
        if (auto known = store.value(v->symbol)) {
          if (!approx_equal(v->value, *known, 1e-6)) {
            fail(app.theorem + " gives " + value_text(store, *v) + " but it is already " + known->to_string());
          }
          continue;
        }
        Number x = v->value;
        const auto& sym = store.symbol(v->symbol);
        bool ok = x.finite() && x.value() > 0 && (sym.kind != SymbolKind::Angle || x.value() < 180.0);
        if (!ok) {
          fail(app.theorem + " gives impossible " + value_text(store, *v));
          continue;
        }
      }
      if (!applied.insert(key).second) continue;
      const int step = static_cast<int>(r.trace.size());
      FactBody body = std::visit([](auto&& c) -> FactBody { return c; }, std::move(app.conclusion));
      auto [id, added] = store.add(std::move(body), step);
      if (!added) continue;
      r.trace.push_back({app.theorem, app.binding, app.premises, id});
      progress = true;
    }
    if (!propagate(store, r.trace, r.inconsistency).empty()) progress = true;
    r.rounds = round;
    if (budget.stop_at_goal && r.goal_symbol && store.determined(*r.goal_symbol)) break;
    if (!progress) break;
  }
  if (r.goal_symbol) r.goal_value = store.value(*r.goal_symbol);
  return r;
}

Figure figure_of(const cdl::FormalProblem& p) {
  std::vector<std::pair<cdl::ConstructionFact, int>> constructions;
  std::vector<std::pair<cdl::RelationFact, int>> relations;
  int id = 0;
  for (const auto& c : p.constructions) constructions.emplace_back(c, id++);
  for (const auto& rel : cdl::relation_facts(p)) relations.emplace_back(rel, id++);
  return Figure::build(constructions, relations);
}

std::vector<int> slice_trace(const DeductionResult& r, int symbol) {
  int last = r.step_of(symbol);
  if (last < 0) return {};
  std::set<int> keep;
  std::vector<int> todo{last};
  while (!todo.empty()) {
    int s = todo.back();
    todo.pop_back();
    if (!keep.insert(s).second) continue;
    for (int premise : r.trace[static_cast<std::size_t>(s)].premises) {
      int from = r.store.fact(premise).step;
      if (from >= 0) todo.push_back(from);
    }
  }
  return {keep.begin(), keep.end()};
}

bool replay(const DeductionResult& r, const std::vector<int>& steps, std::string* why) {
  const auto& store = r.store;
  std::map<int, Number> values;  // fact id -> replayed value
  for (int id : store.value_ids()) {
    if (store.fact(id).step < 0) values[id] = std::get<ValueFact>(store.fact(id).body).value;
  }
  auto complain = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (int s : steps) {
    const auto& step = r.trace[static_cast<std::size_t>(s)];
    for (int premise : step.premises) {
      if (premise >= step.conclusion) return complain("step " + std::to_string(s) + " uses a later fact");
      if (std::holds_alternative<ValueFact>(store.fact(premise).body) && !values.count(premise)) {
        return complain("step " + std::to_string(s) + " uses a value outside the replay");
      }
    }
    const auto* target = std::get_if<ValueFact>(&store.fact(step.conclusion).body);
    if (!target) continue;
    std::optional<Number> v;
    if (step.theorem == "solve_equations") {
      std::vector<Equation> eqs;
      std::map<int, Number> known;
      for (int premise : step.premises) {
        const auto& body = store.fact(premise).body;
        if (const auto* e = std::get_if<Equation>(&body)) eqs.push_back(*e);
        if (const auto* k = std::get_if<ValueFact>(&body)) known[k->symbol] = values.at(premise);
      }
      v = solve_subsystem(eqs, known, target->symbol);
    } else if (computing(step.theorem)) {
      std::vector<std::pair<Symbol, Number>> in;
      for (int premise : step.premises) {
        if (const auto* k = std::get_if<ValueFact>(&store.fact(premise).body)) {
          in.emplace_back(store.symbol(k->symbol), values.at(premise));
        }
      }
      v = recompute(step.theorem, store.symbol(target->symbol), in);
    } else {
      v = target->value;  // a constant fixed by the rule itself
    }
    if (!v || !identical(*v, target->value)) {
      return complain("step " + std::to_string(s) + " (" + step.theorem + ") does not reproduce " +
                      value_text(store, *target));
    }
    values[step.conclusion] = *v;
  }
  return true;
}

bool replay(const DeductionResult& r, std::string* why) {
  std::vector<int> all(r.trace.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return replay(r, all, why);
}

MetricSet extract_metrics(const DeductionResult& r) {
  MetricSet out;
  for (int id : r.store.value_ids()) {
    const auto& v = std::get<ValueFact>(r.store.fact(id).body);
    const auto& sym = r.store.symbol(v.symbol);
    if (auto head = head_of(sym)) out.push_back({sym, head->first, head->second, v.value});
  }
  std::sort(out.begin(), out.end(), [](const Metric& a, const Metric& b) { return a.symbol < b.symbol; });
  return out;
}

MetricSet statement_metrics(const cdl::FormalProblem& p, const Figure& f) {
  MetricSet out;
  for (const auto& m : cdl::metric_facts(p)) {
    auto sym = symbol_for(f, m.quantity, m.args);
    if (!sym) continue;
    if (std::any_of(out.begin(), out.end(), [&](const Metric& x) { return x.symbol == *sym; })) continue;
    out.push_back({*sym, m.quantity, sym->args, m.value});
  }
  std::sort(out.begin(), out.end(), [](const Metric& a, const Metric& b) { return a.symbol < b.symbol; });
  return out;
}

std::string describe_fact(const FactStore& store, int fact_id) {
  const auto& body = store.fact(fact_id).body;
  if (const auto* c = std::get_if<cdl::ConstructionFact>(&body)) return cdl::print_statement(*c);
  if (const auto* r = std::get_if<cdl::RelationFact>(&body)) return cdl::print_statement(*r);
  if (const auto* v = std::get_if<ValueFact>(&body)) return value_text(store, *v);
  const auto& e = std::get<Equation>(body);
  std::ostringstream s;
  for (std::size_t i = 0; i < e.terms.size(); ++i) {
    const auto& t = e.terms[i];
    std::string name = symbol_text(store.symbol(t.symbol));
    if (e.shape == EquationShape::ProductRatio) {
      if (i) s << " * ";
      s << name;
      if (!(t.coef == Number(1))) s << '^' << t.coef.to_string();
      continue;
    }
    Number c = t.coef;
    if (i) s << (c.sign() < 0 ? " - " : " + ");
    else if (c.sign() < 0) s << '-';
    Number mag = c.abs();
    if (!(mag == Number(1))) s << mag.to_string() << '*';
    s << name;
    if (e.shape == EquationShape::SumOfSquares) s << "^2";
  }
  s << " = " << e.rhs.to_string();
  return s.str();
}

nlohmann::json trace_to_json(const DeductionResult& r, const std::vector<int>& steps) {
  nlohmann::json out = nlohmann::json::array();
  for (int s : steps) {
    const auto& step = r.trace[static_cast<std::size_t>(s)];
    nlohmann::json premises = nlohmann::json::array();
    for (int p : step.premises) premises.push_back({{"id", p}, {"fact", describe_fact(r.store, p)}});
    std::string binding;
    for (const auto& b : step.binding) binding += b;
    out.push_back({{"step", s},
                   {"theorem", step.theorem},
                   {"binding", binding},
                   {"premises", premises},
                   {"conclusion", {{"id", step.conclusion}, {"fact", describe_fact(r.store, step.conclusion)}}}});
  }
  return out;
}

}  // namespace geoforge::engine
