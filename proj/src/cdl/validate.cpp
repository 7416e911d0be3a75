#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "geoforge/cdl.hpp"

namespace geoforge::cdl {
namespace {

std::string joined(const PointTuple& t) {
  std::string s;
  for (const auto& p : t) s += p;
  return s;
}

PointTuple sorted(PointTuple t) {
  std::sort(t.begin(), t.end());
  return t;
}

PointTuple min_reversal(const PointTuple& t) {
  PointTuple r(t.rbegin(), t.rend());
  return std::min(t, r);
}

std::string triangle_pair_key(const PointTuple& a, const PointTuple& b) {
  // Simultaneous relabelling of both triangles, plus swapping them.
  static const int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
  std::string best;
  for (const auto& perm : perms) {
    for (int swap = 0; swap < 2; ++swap) {
      const auto& x = swap ? b : a;
      const auto& y = swap ? a : b;
      std::string s = x[perm[0]] + x[perm[1]] + x[perm[2]] + "|" + y[perm[0]] + y[perm[1]] + y[perm[2]];
      if (best.empty() || s < best) best = s;
    }
  }
  return best;
}

void add(ValidationReport& r, ViolationKind k, std::string detail) { r.violations.push_back({k, std::move(detail)}); }

void check_args(ValidationReport& r, const Signature& sig, const std::vector<PointTuple>& args,
                const std::set<PointLabel>& universe, const std::string& where) {
  bool arity_ok = args.size() == sig.arity.size();
  for (std::size_t i = 0; arity_ok && i < args.size(); ++i) {
    int want = sig.arity[i];
    auto got = static_cast<int>(args[i].size());
    if ((want == 0 && got < 3) || (want > 0 && got != want)) arity_ok = false;
  }
  if (!arity_ok) add(r, ViolationKind::ArityError, where);
  for (const auto& tuple : args) {
    if (std::set<PointLabel>(tuple.begin(), tuple.end()).size() != tuple.size()) {
      add(r, ViolationKind::ArityError, where + ": repeated point");
    }
    for (const auto& p : tuple) {
      if (!universe.count(p)) add(r, ViolationKind::UndeclaredPoint, p);
    }
  }
}

}  // namespace

PointTuple canonical_cycle(const PointTuple& cycle) {
  PointTuple best = cycle;
  const std::size_t n = cycle.size();
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t start = 0; start < n; ++start) {
      PointTuple cand(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = dir == 0 ? (start + i) % n : (start + n - i) % n;
        cand[i] = cycle[k];
      }
      if (cand < best) best = cand;
    }
  }
  return best;
}

std::string_view name_of(ViolationKind k) {
  switch (k) {
    case ViolationKind::UndeclaredPoint: return "UndeclaredPoint";
    case ViolationKind::ArityError: return "ArityError";
    case ViolationKind::DuplicateFact: return "DuplicateFact";
    case ViolationKind::GoalStatedAsPremise: return "GoalStatedAsPremise";
    case ViolationKind::OutOfRange: return "OutOfRange";
    case ViolationKind::InvalidConstruction: return "InvalidConstruction";
  }
  return "?";
}

bool ValidationReport::has(ViolationKind k) const {
  return std::any_of(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; });
}

std::vector<PointLabel> point_universe(const FormalProblem& p) {
  std::set<PointLabel> pts;
  for (const auto& c : p.constructions) {
    for (const auto& t : c.args) pts.insert(t.begin(), t.end());
  }
  return {pts.begin(), pts.end()};
}

std::string head_key(Quantity q, const PointTuple& args) {
  std::string key(name_of(q));
  key += ':';
  switch (q) {
    case Quantity::LengthOfLine: key += joined(sorted(args)); break;
    case Quantity::MeasureOfAngle: key += joined(min_reversal(args)); break;
    case Quantity::PerimeterOf:
    case Quantity::AreaOf: key += joined(canonical_cycle(args)); break;
    default: key += joined(args); break;
  }
  return key;
}

std::string relation_key(const RelationFact& f) {
  std::string key(name_of(f.predicate));
  key += ':';
  const auto& a = f.args;
  auto arity_ok = [&](std::size_t n) { return a.size() == n; };
  switch (f.predicate) {
    case Predicate::ParallelBetweenLine:
    case Predicate::PerpendicularBetweenLine:
      if (arity_ok(2)) {
        auto l1 = joined(sorted(a[0]));
        auto l2 = joined(sorted(a[1]));
        key += std::min(l1, l2) + "|" + std::max(l1, l2);
        return key;
      }
      break;
    case Predicate::IsMidpointOfLine:
      if (arity_ok(2)) return key + joined(a[0]) + "|" + joined(sorted(a[1]));
      break;
    case Predicate::IsBisectorOfAngle:
      if (arity_ok(2)) return key + joined(a[0]) + "|" + joined(min_reversal(a[1]));
      break;
    case Predicate::IsAltitudeOfTriangle:
    case Predicate::IsMedianOfTriangle:
      if (arity_ok(2) && a[1].size() == 3) {
        return key + joined(a[0]) + "|" + a[1][0] + joined(sorted({a[1][1], a[1][2]}));
      }
      break;
    case Predicate::IsoscelesTriangle:
      if (arity_ok(1) && a[0].size() == 3) return key + a[0][0] + joined(sorted({a[0][1], a[0][2]}));
      break;
    case Predicate::RightTriangle:
      if (arity_ok(1) && a[0].size() == 3) return key + a[0][1] + joined(sorted({a[0][0], a[0][2]}));
      break;
    case Predicate::EquilateralTriangle:
      if (arity_ok(1)) return key + joined(sorted(a[0]));
      break;
    case Predicate::Parallelogram:
    case Predicate::Rectangle:
    case Predicate::Square:
      if (arity_ok(1)) return key + joined(canonical_cycle(a[0]));
      break;
    case Predicate::IsDiameterOfCircle:
      if (arity_ok(2)) return key + joined(sorted(a[0])) + "|" + joined(a[1]);
      break;
    case Predicate::IsTangentOfCircle: break;
    case Predicate::SimilarBetweenTriangle:
    case Predicate::CongruentBetweenTriangle:
      if (arity_ok(2) && a[0].size() == 3 && a[1].size() == 3) return key + triangle_pair_key(a[0], a[1]);
      break;
  }
  for (std::size_t i = 0; i < a.size(); ++i) key += (i ? "|" : "") + joined(a[i]);
  return key;
}

std::vector<MetricFact> metric_facts(const FormalProblem& p) {
  std::vector<MetricFact> out;
  for (const auto* list : {&p.text_facts, &p.image_facts}) {
    for (const auto& f : *list) {
      if (const auto* m = std::get_if<MetricFact>(&f)) out.push_back(*m);
    }
  }
  return out;
}

std::vector<RelationFact> relation_facts(const FormalProblem& p) {
  std::vector<RelationFact> out;
  for (const auto* list : {&p.text_facts, &p.image_facts}) {
    for (const auto& f : *list) {
      if (const auto* r = std::get_if<RelationFact>(&f)) out.push_back(*r);
    }
  }
  return out;
}

ValidationReport validate(const FormalProblem& p) {
  ValidationReport r;
  auto universe_list = point_universe(p);
  std::set<PointLabel> universe(universe_list.begin(), universe_list.end());

  for (const auto& c : p.constructions) {
    std::string where = print_statement(c);
    switch (c.kind) {
      case ConstructionKind::Shape: {
        bool ok = c.args.size() >= 3;
        std::set<PointLabel> starts;
        for (std::size_t i = 0; ok && i < c.args.size(); ++i) {
          const auto& e = c.args[i];
          const auto& next = c.args[(i + 1) % c.args.size()];
          ok = e.size() == 2 && next.size() == 2 && e[1] == next[0] && e[0] != e[1] && starts.insert(e[0]).second;
        }
        if (!ok) add(r, ViolationKind::InvalidConstruction, where);
        break;
      }
      case ConstructionKind::Collinear: {
        bool ok = c.args.size() == 1 && c.args[0].size() >= 3 &&
                  std::set<PointLabel>(c.args[0].begin(), c.args[0].end()).size() == c.args[0].size();
        if (!ok) add(r, ViolationKind::InvalidConstruction, where);
        break;
      }
      case ConstructionKind::Cocircular: {
        bool ok = c.args.size() == 2 && c.args[0].size() == 1 && !c.args[1].empty();
        if (!ok) add(r, ViolationKind::InvalidConstruction, where);
        break;
      }
    }
  }
  std::set<std::string> construction_seen;
  for (const auto& c : p.constructions) {
    if (!construction_seen.insert(print_statement(c)).second) add(r, ViolationKind::DuplicateFact, print_statement(c));
  }

  std::set<std::string> seen;
  std::set<std::string> metric_heads;
  for (const auto* list : {&p.text_facts, &p.image_facts}) {
    for (const auto& f : *list) {
      std::string where = print_statement(f);
      std::string key;
      if (const auto* rel = std::get_if<RelationFact>(&f)) {
        check_args(r, signature(rel->predicate), rel->args, universe, where);
        key = relation_key(*rel);
      } else {
        const auto& m = std::get<MetricFact>(f);
        check_args(r, signature(m.quantity), {m.args}, universe, where);
        key = head_key(m.quantity, m.args);
        metric_heads.insert(key);
        double v = m.value.value();
        bool in_range = m.value.finite() && std::isfinite(v) &&
                        (is_angle(m.quantity) ? (v > 0.0 && v < 360.0) : v > 0.0);
        if (!in_range) add(r, ViolationKind::OutOfRange, where);
      }
      if (!seen.insert(key).second) add(r, ViolationKind::DuplicateFact, where);
    }
  }

  if (p.goal) {
    std::string where = print_statement(*p.goal);
    check_args(r, signature(p.goal->quantity), {p.goal->args}, universe, where);
    if (metric_heads.count(head_key(p.goal->quantity, p.goal->args))) {
      add(r, ViolationKind::GoalStatedAsPremise, where);
    }
  }
  return r;
}

}  // namespace geoforge::cdl
