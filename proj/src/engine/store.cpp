#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "geoforge/engine.hpp"

namespace geoforge::engine {
namespace {

constexpr double kZero = 1e-12;

bool near_zero(const Number& n) { return n.exact() ? n.is_zero() : std::fabs(n.value()) < kZero; }

Number finish(const Number& n) { return n.exact() ? n : Number::snapped(n.value()); }

Number power(const Number& base, std::int64_t e) {
  Number out(1);
  for (std::int64_t i = 0; i < (e < 0 ? -e : e); ++i) out *= base;
  return e < 0 ? Number(1) / out : out;
}

struct Row {
  std::map<int, Number> coef;
  Number rhs;
  std::set<std::size_t> sources;
};

// Reduced row echelon form in place; pivot columns in ascending symbol order.
void reduce(std::vector<Row>& rows) {
  std::set<int> columns;
  for (const auto& r : rows) {
    for (const auto& [s, c] : r.coef) columns.insert(s);
  }
  std::size_t next = 0;
  for (int col : columns) {
    std::size_t pivot = rows.size();
    double best = 0.0;
    for (std::size_t i = next; i < rows.size(); ++i) {
      auto it = rows[i].coef.find(col);
      if (it == rows[i].coef.end() || near_zero(it->second)) continue;
      if (it->second.exact()) {
        pivot = i;
        break;
      }
      if (std::fabs(it->second.value()) > best) {
        best = std::fabs(it->second.value());
        pivot = i;
      }
    }
    if (pivot == rows.size()) continue;
    std::swap(rows[next], rows[pivot]);
    Row& p = rows[next];
    Number lead = p.coef.at(col);
    for (auto& [s, c] : p.coef) c = c / lead;
    p.rhs = p.rhs / lead;
    p.coef[col] = Number(1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == next) continue;
      auto it = rows[i].coef.find(col);
      if (it == rows[i].coef.end()) continue;
      Number f = it->second;
      if (near_zero(f)) {
        rows[i].coef.erase(it);
        continue;
      }
      for (const auto& [s, c] : p.coef) {
        Number v = rows[i].coef[s] - f * c;
        if (near_zero(v)) {
          rows[i].coef.erase(s);
        } else {
          rows[i].coef[s] = v;
        }
      }
      rows[i].rhs = rows[i].rhs - f * p.rhs;
      rows[i].sources.insert(p.sources.begin(), p.sources.end());
    }
    ++next;
  }
}

// Substitutes known values into a linear equation.
Row substitute(const Equation& eq, const std::map<int, Number>& known, std::size_t source) {
  Row r;
  r.rhs = eq.rhs;
  r.sources.insert(source);
  for (const auto& t : eq.terms) {
    auto it = known.find(t.symbol);
    if (it != known.end()) {
      r.rhs = r.rhs - t.coef * it->second;
    } else {
      r.coef[t.symbol] = r.coef[t.symbol] + t.coef;
    }
  }
  return r;
}

// Closed-form solution of one equation with a single unknown.
std::optional<Number> solve_single(const Equation& eq, const std::map<int, Number>& known, int target) {
  Number rest = eq.shape == EquationShape::ProductRatio ? Number(1) : Number(0);
  std::optional<Number> coef;
  for (const auto& t : eq.terms) {
    if (t.symbol == target) {
      coef = t.coef;
      continue;
    }
    auto it = known.find(t.symbol);
    if (it == known.end()) return std::nullopt;
    switch (eq.shape) {
      case EquationShape::Linear: rest += t.coef * it->second; break;
      case EquationShape::SumOfSquares: rest += t.coef * it->second * it->second; break;
      case EquationShape::ProductRatio:
        if (near_zero(it->second)) return std::nullopt;
        rest *= power(it->second, t.coef.is_integer() ? t.coef.num() : 1);
        break;
    }
  }
  if (!coef || near_zero(*coef)) return std::nullopt;
  switch (eq.shape) {
    case EquationShape::Linear: return finish((eq.rhs - rest) / *coef);
    case EquationShape::SumOfSquares: {
      Number sq = (eq.rhs - rest) / *coef;
      if (sq.sign() <= 0 || near_zero(sq)) return std::nullopt;
      return finish(sq.sqrt());
    }
    case EquationShape::ProductRatio: {
      if (!coef->is_integer()) return std::nullopt;
      Number v = eq.rhs / rest;
      std::int64_t e = coef->num();
      if (e < 0) {
        if (near_zero(v)) return std::nullopt;
        v = Number(1) / v;
        e = -e;
      }
      if (e == 1) return finish(v);
      if (e == 2 && v.sign() > 0) return finish(v.sqrt());
      return std::nullopt;
    }
  }
  return std::nullopt;
}

bool plausible(const Symbol& s, const Number& v) {
  double x = v.value();
  if (!std::isfinite(x)) return false;
  switch (s.kind) {
    case SymbolKind::Angle: return x > 1e-9 && x < 180.0 - 1e-9;
    case SymbolKind::ArcMeasure: return x > 1e-9 && x < 360.0 - 1e-9;
    default: return x > 1e-9;
  }
}

}  // namespace

std::string_view name_of(EquationShape s) {
  switch (s) {
    case EquationShape::Linear: return "linear";
    case EquationShape::ProductRatio: return "product-ratio";
    case EquationShape::SumOfSquares: return "sum-of-squares";
  }
  return "?";
}

Equation Equation::normalized() const {
  std::map<int, Number> merged;
  for (const auto& t : terms) merged[t.symbol] = merged[t.symbol] + t.coef;
  Equation out{shape, {}, rhs};
  for (const auto& [s, c] : merged) {
    if (!near_zero(c)) out.terms.push_back({s, c});
  }
  if (out.terms.empty()) return out;
  if (shape == EquationShape::ProductRatio) {
    if (out.terms.front().coef.sign() < 0) {
      for (auto& t : out.terms) t.coef = -t.coef;
      out.rhs = Number(1) / out.rhs;
    }
  } else {
    Number lead = out.terms.front().coef;
    for (auto& t : out.terms) t.coef = t.coef / lead;
    out.rhs = out.rhs / lead;
  }
  return out;
}

std::string Equation::key() const {
  std::ostringstream k;
  k << name_of(shape) << ':';
  for (const auto& t : terms) k << t.symbol << '*' << t.coef.to_string() << ',';
  k << '=' << rhs.to_string();
  return k.str();
}

int FactStore::intern(const Symbol& s) {
  auto [it, fresh] = symbol_ids_.emplace(s, static_cast<int>(symbols_.size()));
  if (fresh) symbols_.push_back(s);
  return it->second;
}

std::optional<int> FactStore::find(const Symbol& s) const {
  auto it = symbol_ids_.find(s);
  if (it == symbol_ids_.end()) return std::nullopt;
  return it->second;
}

std::pair<int, bool> FactStore::add(FactBody body, int step) {
  const int id = static_cast<int>(facts_.size());
  if (auto* r = std::get_if<cdl::RelationFact>(&body)) {
    auto [it, fresh] = relation_keys_.emplace(cdl::relation_key(*r), id);
    if (!fresh) return {it->second, false};
    relations_.push_back(id);
  } else if (auto* e = std::get_if<Equation>(&body)) {
    *e = e->normalized();
    auto [it, fresh] = equation_keys_.emplace(e->key(), id);
    if (!fresh) return {it->second, false};
    equations_.push_back(id);
  } else if (auto* v = std::get_if<ValueFact>(&body)) {
    auto [it, fresh] = determined_.emplace(v->symbol, id);
    if (!fresh) return {it->second, false};
    values_.push_back(id);
  }
  facts_.push_back({std::move(body), step});
  ++generation_;
  return {id, true};
}

std::optional<int> FactStore::value_fact(int symbol) const {
  auto it = determined_.find(symbol);
  if (it == determined_.end()) return std::nullopt;
  return it->second;
}

std::optional<Number> FactStore::value(int symbol) const {
  auto f = value_fact(symbol);
  if (!f) return std::nullopt;
  return std::get<ValueFact>(fact(*f).body).value;
}

std::optional<int> FactStore::relation_id(const cdl::RelationFact& r) const {
  auto it = relation_keys_.find(cdl::relation_key(r));
  if (it == relation_keys_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> FactStore::equation_id(const Equation& e) const {
  auto it = equation_keys_.find(e.normalized().key());
  if (it == equation_keys_.end()) return std::nullopt;
  return it->second;
}

std::optional<Number> solve_subsystem(const std::vector<Equation>& equations, const std::map<int, Number>& known,
                                      int target) {
  if (equations.size() == 1) return solve_single(equations.front(), known, target);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < equations.size(); ++i) {
    if (equations[i].shape != EquationShape::Linear) return std::nullopt;
    rows.push_back(substitute(equations[i], known, i));
  }
  reduce(rows);
  for (const auto& r : rows) {
    if (r.coef.size() == 1 && r.coef.begin()->first == target) return finish(r.rhs / r.coef.begin()->second);
  }
  return std::nullopt;
}

double max_equation_gap(const FactStore& store) {
  double worst = 0.0;
  for (int id : store.equation_ids()) {
    const auto& eq = std::get<Equation>(store.fact(id).body);
    double lhs = eq.shape == EquationShape::ProductRatio ? 1.0 : 0.0;
    bool full = true;
    for (const auto& t : eq.terms) {
      auto v = store.value(t.symbol);
      if (!v) {
        full = false;
        break;
      }
      double x = v->value(), c = t.coef.value();
      switch (eq.shape) {
        case EquationShape::Linear: lhs += c * x; break;
        case EquationShape::SumOfSquares: lhs += c * x * x; break;
        case EquationShape::ProductRatio: lhs *= std::pow(x, c); break;
      }
    }
    if (!full) continue;
    double rhs = eq.rhs.value();
    worst = std::max(worst, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs)));
  }
  return worst;
}

std::vector<int> propagate(FactStore& store, std::vector<DerivationStep>& trace,
                           std::optional<std::string>& inconsistency) {
  std::vector<int> fresh;
  auto known_of = [&](const std::vector<int>& eq_ids, std::vector<int>& premises) {
    std::map<int, Number> known;
    std::set<int> seen;
    for (int id : eq_ids) {
      for (const auto& t : std::get<Equation>(store.fact(id).body).terms) {
        if (!seen.insert(t.symbol).second) continue;
        if (auto f = store.value_fact(t.symbol)) {
          known[t.symbol] = std::get<ValueFact>(store.fact(*f).body).value;
          premises.push_back(*f);
        }
      }
    }
    return known;
  };
  auto record = [&](int target, const Number& v, std::vector<int> premises) {
    if (!plausible(store.symbol(target), v)) {
      if (!inconsistency) inconsistency = symbol_text(store.symbol(target)) + " solves to " + v.to_string();
      return false;
    }
    auto step = static_cast<int>(trace.size());
    auto [id, added] = store.add(ValueFact{target, v}, step);
    if (!added) return false;
    trace.push_back({"solve_equations", store.symbol(target).args, std::move(premises), id});
    fresh.push_back(target);
    return true;
  };

  for (bool progress = true; progress && !inconsistency;) {
    progress = false;
    for (int id : store.equation_ids()) {
      const auto& eq = std::get<Equation>(store.fact(id).body);
      int unknown = -1, count = 0;
      for (const auto& t : eq.terms) {
        if (!store.determined(t.symbol)) {
          unknown = t.symbol;
          ++count;
        }
      }
      if (count != 1) continue;
      std::vector<int> premises{id};
      auto known = known_of({id}, premises);
      auto v = solve_subsystem({eq}, known, unknown);
      if (v && record(unknown, *v, std::move(premises))) progress = true;
      if (inconsistency) break;
    }
    if (progress || inconsistency) continue;

    std::vector<int> linear;
    std::vector<Row> rows;
    std::map<int, Number> all_known;
    for (int id : store.equation_ids()) {
      const auto& eq = std::get<Equation>(store.fact(id).body);
      if (eq.shape != EquationShape::Linear) continue;
      for (const auto& t : eq.terms) {
        if (auto v = store.value(t.symbol)) all_known[t.symbol] = *v;
      }
      rows.push_back(substitute(eq, all_known, linear.size()));
      linear.push_back(id);
    }
    reduce(rows);
    for (const auto& r : rows) {
      if (r.coef.empty()) {
        if (!near_zero(r.rhs) && std::fabs(r.rhs.value()) > 1e-6) {
          std::vector<int> src;
          for (auto s : r.sources) src.push_back(linear[s]);
          std::ostringstream msg;
          msg << "linear equations";
          for (int s : src) msg << ' ' << s;
          msg << " are contradictory";
          inconsistency = msg.str();
        }
        continue;
      }
      if (r.coef.size() != 1) continue;
      int target = r.coef.begin()->first;
      if (store.determined(target)) continue;
      std::vector<int> eq_ids;
      for (auto s : r.sources) eq_ids.push_back(linear[s]);
      std::vector<int> premises = eq_ids;
      auto known = known_of(eq_ids, premises);
      std::vector<Equation> eqs;
      for (int id : eq_ids) eqs.push_back(std::get<Equation>(store.fact(id).body));
      auto v = solve_subsystem(eqs, known, target);
      if (v && record(target, *v, std::move(premises))) progress = true;
      if (inconsistency) break;
    }
  }

  if (!inconsistency) {
    double gap = max_equation_gap(store);
    if (gap > 1e-6) {
      std::ostringstream msg;
      msg << "determined values violate an equation by " << gap;
      inconsistency = msg.str();
    }
  }
  return fresh;
}

}  // namespace geoforge::engine
