#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "geoforge/engine.hpp"

namespace geoforge::engine {
namespace {

using cdl::Predicate;
using cdl::RelationFact;
using Terms = std::vector<std::pair<std::optional<Symbol>, Number>>;

constexpr double kDegree = std::numbers::pi / 180.0;

class Out {
 public:
  Out(Context& ctx, std::vector<Application>& apps, std::string_view theorem)
      : ctx_(ctx), apps_(apps), theorem_(theorem) {}

  void equation(PointTuple binding, std::vector<int> premises, const Terms& terms, Number rhs,
                EquationShape shape = EquationShape::Linear) {
    Equation eq{shape, {}, rhs};
    for (const auto& [s, c] : terms) {
      if (!s) return;
      eq.terms.push_back({ctx_.store.intern(*s), c});
    }
    apps_.push_back({theorem_, std::move(binding), std::move(premises), std::move(eq)});
  }

  void value(PointTuple binding, std::vector<int> premises, const std::optional<Symbol>& s, Number v) {
    if (!s) return;
    apps_.push_back({theorem_, std::move(binding), std::move(premises), ValueFact{ctx_.store.intern(*s), v}});
  }

  void relation(PointTuple binding, std::vector<int> premises, RelationFact r) {
    apps_.push_back({theorem_, std::move(binding), std::move(premises), std::move(r)});
  }

 private:
  Context& ctx_;
  std::vector<Application>& apps_;
  std::string theorem_;
};

Symbol len(const PointLabel& a, const PointLabel& b) { return Figure::length(a, b); }

std::vector<int> merged(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

// Relations of one predicate currently in the store, with their fact ids.
std::vector<std::pair<const RelationFact*, int>> relations(const Context& ctx, Predicate p) {
  std::vector<std::pair<const RelationFact*, int>> out;
  for (int id : ctx.store.relation_ids()) {
    const auto& r = std::get<RelationFact>(ctx.store.fact(id).body);
    if (r.predicate == p) out.emplace_back(&r, id);
  }
  return out;
}

std::optional<Ray> make_ray(const Figure& f, const PointLabel& v, int line, int dir) {
  int iv = f.index_on(line, v);
  if (iv < 0 || dir == 0) return std::nullopt;
  int n = static_cast<int>(f.lines()[static_cast<std::size_t>(line)].points.size());
  if ((dir < 0 && iv == 0) || (dir > 0 && iv == n - 1)) return std::nullopt;
  Ray r{v, line, dir, {}};
  r.rep = f.ray_points(r).front();
  return r;
}

std::optional<Symbol> angle_of(const Figure& f, const std::optional<Ray>& a, const std::optional<Ray>& b) {
  if (!a || !b) return std::nullopt;
  return f.angle(*a, *b);
}

std::vector<int> line_sources(const Figure& f, int line) { return f.lines()[static_cast<std::size_t>(line)].sources; }

std::vector<int> triangle_sources(const Figure& f, const PointLabel& a, const PointLabel& b, const PointLabel& c) {
  return f.sources_of({{a, b}, {b, c}, {c, a}});
}

bool is_exact_angle(const Number& v, std::int64_t deg) { return v.exact() && v == Number(deg); }

// Exact cosine/sine on the angles where they are rational.
Number cos_deg(const Number& v) {
  if (is_exact_angle(v, 60)) return Number::ratio(1, 2);
  if (is_exact_angle(v, 90)) return Number(0);
  if (is_exact_angle(v, 120)) return Number::ratio(-1, 2);
  return Number::real(std::cos(v.value() * kDegree));
}

Number sin_deg(const Number& v) {
  if (is_exact_angle(v, 30) || is_exact_angle(v, 150)) return Number::ratio(1, 2);
  if (is_exact_angle(v, 90)) return Number(1);
  return Number::real(std::sin(v.value() * kDegree));
}

Number settle(const Number& n) { return n.exact() ? n : Number::snapped(n.value()); }

// Polygons whose perimeter or area may be named: faces, quadrilateral and
// triangle relations, and polygons already present as symbols.
std::vector<std::pair<PointTuple, std::vector<int>>> polygons(const Context& ctx) {
  std::vector<std::pair<PointTuple, std::vector<int>>> out;
  std::set<PointTuple> seen;
  auto add = [&](const PointTuple& cycle, std::vector<int> sources) {
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      if (!ctx.figure.connected(cycle[i], cycle[(i + 1) % cycle.size()])) return;
    }
    if (seen.insert(cdl::canonical_cycle(cycle)).second) out.emplace_back(cycle, std::move(sources));
  };
  for (const auto& face : ctx.figure.faces()) add(face.vertices, {face.source});
  for (int id : ctx.store.relation_ids()) {
    const auto& r = std::get<RelationFact>(ctx.store.fact(id).body);
    switch (r.predicate) {
      case Predicate::Parallelogram:
      case Predicate::Rectangle:
      case Predicate::Square:
      case Predicate::IsoscelesTriangle:
      case Predicate::EquilateralTriangle:
      case Predicate::RightTriangle: add(r.args[0], {id}); break;
      default: break;
    }
  }
  for (std::size_t s = 0; s < ctx.store.symbol_count(); ++s) {
    const auto& sym = ctx.store.symbol(static_cast<int>(s));
    if (sym.kind == SymbolKind::Perimeter || sym.kind == SymbolKind::Area) {
      std::vector<std::pair<PointLabel, PointLabel>> sides;
      for (std::size_t i = 0; i < sym.args.size(); ++i) sides.emplace_back(sym.args[i], sym.args[(i + 1) % sym.args.size()]);
      add(sym.args, ctx.figure.sources_of(sides));
    }
  }
  return out;
}

// Triangular polygons without straight corners, as (a, b, c, sources).
std::vector<std::pair<std::array<PointLabel, 3>, std::vector<int>>> triangle_polygons(const Context& ctx) {
  std::vector<std::pair<std::array<PointLabel, 3>, std::vector<int>>> out;
  for (auto& [cycle, src] : polygons(ctx)) {
    if (cycle.size() == 3 && !ctx.figure.collinear(cycle[0], cycle[1], cycle[2])) {
      out.push_back({{cycle[0], cycle[1], cycle[2]}, src});
    }
  }
  return out;
}

std::optional<int> value_fact(const Context& ctx, const std::optional<Symbol>& s) {
  if (!s) return std::nullopt;
  auto id = ctx.store.find(*s);
  if (!id) return std::nullopt;
  return ctx.store.value_fact(*id);
}

Number value_at(const Context& ctx, int fact) { return std::get<ValueFact>(ctx.store.fact(fact).body).value; }

bool undetermined(Context& ctx, const std::optional<Symbol>& s) {
  return s && !ctx.store.determined(ctx.store.intern(*s));
}

// ---- figure rules ------------------------------------------------------------

void triangle_angle_sum(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "triangle_angle_sum");
  const auto& f = ctx.figure;
  for (const auto& [a, b, c] : f.triangles()) {
    out.equation({a, b, c}, triangle_sources(f, a, b, c),
                 {{f.angle(b, a, c), 1}, {f.angle(a, b, c), 1}, {f.angle(a, c, b), 1}}, 180);
  }
}

void exterior_angle(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "exterior_angle");
  const auto& f = ctx.figure;
  for (const auto& [a, b, c] : f.triangles()) {
    const std::array<PointLabel, 3> t{a, b, c};
    for (int vi = 0; vi < 3; ++vi) {
      const auto& v = t[static_cast<std::size_t>(vi)];
      for (int ui = 0; ui < 3; ++ui) {
        if (ui == vi) continue;
        const auto& u = t[static_cast<std::size_t>(ui)];
        const auto& w = t[static_cast<std::size_t>(3 - vi - ui)];
        Ray toward_u = f.ray(v, u);
        if (toward_u.line < 0) continue;
        auto beyond = make_ray(f, v, toward_u.line, -toward_u.dir);
        if (!beyond) continue;
        out.equation({a, b, c, beyond->rep}, merged(triangle_sources(f, a, b, c), line_sources(f, toward_u.line)),
                     {{angle_of(f, beyond, f.ray(v, w)), 1}, {f.angle(v, u, w), -1}, {f.angle(v, w, u), -1}}, 0);
      }
    }
  }
}

void vertical_angles(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "vertical_angles");
  const auto& f = ctx.figure;
  for (const auto& p : f.points()) {
    std::vector<int> through;
    for (std::size_t i = 0; i < f.lines().size(); ++i) {
      if (make_ray(f, p, static_cast<int>(i), 1) && make_ray(f, p, static_cast<int>(i), -1)) {
        through.push_back(static_cast<int>(i));
      }
    }
    for (std::size_t i = 0; i < through.size(); ++i) {
      for (std::size_t j = i + 1; j < through.size(); ++j) {
        auto a1 = make_ray(f, p, through[i], 1), a2 = make_ray(f, p, through[i], -1);
        auto b1 = make_ray(f, p, through[j], 1), b2 = make_ray(f, p, through[j], -1);
        auto src = merged(line_sources(f, through[i]), line_sources(f, through[j]));
        out.equation({a1->rep, p, b1->rep}, src, {{angle_of(f, a1, b1), 1}, {angle_of(f, a2, b2), -1}}, 0);
        out.equation({a1->rep, p, b2->rep}, src, {{angle_of(f, a1, b2), 1}, {angle_of(f, a2, b1), -1}}, 0);
      }
    }
  }
}

void linear_pair(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "linear_pair");
  const auto& f = ctx.figure;
  for (const auto& p : f.points()) {
    auto rays = f.rays_at(p);
    for (std::size_t i = 0; i < f.lines().size(); ++i) {
      auto a = make_ray(f, p, static_cast<int>(i), -1), b = make_ray(f, p, static_cast<int>(i), 1);
      if (!a || !b) continue;
      for (const auto& c : rays) {
        if (c.line == static_cast<int>(i)) continue;
        out.equation({a->rep, p, b->rep, c.rep}, merged(line_sources(f, static_cast<int>(i)), line_sources(f, c.line)),
                     {{f.angle(*a, c), 1}, {f.angle(c, *b), 1}}, 180);
      }
    }
  }
}

void angle_addition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "angle_addition");
  const auto& f = ctx.figure;
  struct Corner {
    Ray a, b;
    int source;
  };
  for (const auto& v : f.points()) {
    std::vector<Corner> corners;
    for (const auto& face : f.faces()) {
      const auto& vs = face.vertices;
      auto it = std::find(vs.begin(), vs.end(), v);
      if (it == vs.end()) continue;
      std::size_t k = static_cast<std::size_t>(it - vs.begin());
      Ray a = f.ray(v, vs[(k + vs.size() - 1) % vs.size()]);
      Ray b = f.ray(v, vs[(k + 1) % vs.size()]);
      if (a == b || f.opposite(a, b)) continue;
      corners.push_back({a, b, face.source});
    }
    if (corners.size() < 2) continue;
    std::vector<int> uses(corners.size() * 2, 0);
    auto count = [&](const Ray& r) {
      int n = 0;
      for (const auto& c : corners) n += (c.a == r) + (c.b == r);
      return n;
    };
    bool full = corners.size() >= 3 && std::all_of(corners.begin(), corners.end(), [&](const Corner& c) {
                  return count(c.a) == 2 && count(c.b) == 2;
                });
    if (full) {
      Terms terms;
      std::vector<int> src;
      for (const auto& c : corners) {
        terms.emplace_back(f.angle(c.a, c.b), 1);
        src.push_back(c.source);
      }
      out.equation({v}, merged(src, {}), terms, 360);
      continue;
    }
    for (std::size_t i = 0; i < corners.size(); ++i) {
      for (std::size_t j = 0; j < corners.size(); ++j) {
        if (i == j) continue;
        // Orient both corners so they meet at a shared middle ray.
        for (int fi = 0; fi < 2; ++fi) {
          for (int fj = 0; fj < 2; ++fj) {
            Ray r1 = fi ? corners[i].b : corners[i].a, r2 = fi ? corners[i].a : corners[i].b;
            Ray s2 = fj ? corners[j].b : corners[j].a, r3 = fj ? corners[j].a : corners[j].b;
            if (!(r2 == s2) || r1 == r3 || f.opposite(r1, r3) || r1.rep > r3.rep) continue;
            out.equation({r1.rep, v, r2.rep, r3.rep}, merged({corners[i].source}, {corners[j].source}),
                         {{f.angle(r1, r3), 1}, {f.angle(r1, r2), -1}, {f.angle(r2, r3), -1}}, 0);
          }
        }
      }
    }
  }
}

void segment_addition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "segment_addition");
  for (const auto& line : ctx.figure.lines()) {
    const auto& p = line.points;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        for (std::size_t k = j + 1; k < p.size(); ++k) {
          out.equation({p[i], p[j], p[k]}, line.sources,
                       {{len(p[i], p[k]), 1}, {len(p[i], p[j]), -1}, {len(p[j], p[k]), -1}}, 0);
        }
      }
    }
  }
}

void polygon_perimeter(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "polygon_perimeter");
  for (const auto& [cycle, src] : polygons(ctx)) {
    Terms terms{{Figure::polygon(SymbolKind::Perimeter, cycle), 1}};
    for (std::size_t i = 0; i < cycle.size(); ++i) terms.emplace_back(len(cycle[i], cycle[(i + 1) % cycle.size()]), -1);
    out.equation(cycle, src, terms, 0);
  }
}

// ---- relation rules ----------------------------------------------------------

void perpendicular_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "perpendicular_definition");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::PerpendicularBetweenLine)) {
    auto l1 = f.line_through(r->args[0][0], r->args[0][1]);
    auto l2 = f.line_through(r->args[1][0], r->args[1][1]);
    if (!l1 || !l2 || *l1 == *l2) continue;
    for (const auto& p : f.lines()[static_cast<std::size_t>(*l1)].points) {
      if (f.index_on(*l2, p) < 0) continue;
      for (int d1 : {-1, 1}) {
        for (int d2 : {-1, 1}) {
          auto a = make_ray(f, p, *l1, d1), b = make_ray(f, p, *l2, d2);
          if (!a || !b) continue;
          out.value({a->rep, p, b->rep}, merged({id}, merged(line_sources(f, *l1), line_sources(f, *l2))),
                    f.angle(*a, *b), 90);
        }
      }
    }
  }
}

void parallel_rules(Context& ctx, std::vector<Application>& apps, int which) {
  static const char* names[] = {"parallel_alternate_angles", "parallel_corresponding_angles",
                                "parallel_cointerior_angles"};
  Out out(ctx, apps, names[which]);
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::ParallelBetweenLine)) {
    const auto &a = r->args[0], &b = r->args[1];
    auto l1 = f.line_through(a[0], a[1]);
    auto l2 = f.line_through(b[0], b[1]);
    if (!l1 || !l2 || *l1 == *l2) continue;
    int d1 = f.index_on(*l1, a[1]) > f.index_on(*l1, a[0]) ? 1 : -1;
    int d2 = f.index_on(*l2, b[1]) > f.index_on(*l2, b[0]) ? 1 : -1;
    for (std::size_t t = 0; t < f.lines().size(); ++t) {
      int lt = static_cast<int>(t);
      if (lt == *l1 || lt == *l2) continue;
      const auto& tp = f.lines()[t].points;
      for (const auto& p : tp) {
        if (f.index_on(*l1, p) < 0) continue;
        for (const auto& q : tp) {
          if (q == p || f.index_on(*l2, q) < 0) continue;
          Ray pq = f.ray(p, q), qp = f.ray(q, p);
          auto p_away = make_ray(f, p, lt, -pq.dir), q_away = make_ray(f, q, lt, -qp.dir);
          auto up = make_ray(f, p, *l1, d1), um = make_ray(f, p, *l1, -d1);
          auto vp = make_ray(f, q, *l2, d2), vm = make_ray(f, q, *l2, -d2);
          auto src = merged({id}, merged(line_sources(f, lt), merged(line_sources(f, *l1), line_sources(f, *l2))));
          PointTuple binding{p, q};
          auto equal = [&](const std::optional<Symbol>& x, const std::optional<Symbol>& y) {
            out.equation(binding, src, {{x, 1}, {y, -1}}, 0);
          };
          if (which == 0) {
            equal(angle_of(f, up, pq), angle_of(f, vm, qp));
            equal(angle_of(f, um, pq), angle_of(f, vp, qp));
          } else if (which == 1) {
            equal(angle_of(f, up, p_away), angle_of(f, vp, qp));
            equal(angle_of(f, um, p_away), angle_of(f, vm, qp));
            equal(angle_of(f, up, pq), angle_of(f, vp, q_away));
            equal(angle_of(f, um, pq), angle_of(f, vm, q_away));
          } else {
            out.equation(binding, src, {{angle_of(f, up, pq), 1}, {angle_of(f, vp, qp), 1}}, 180);
            out.equation(binding, src, {{angle_of(f, um, pq), 1}, {angle_of(f, vm, qp), 1}}, 180);
          }
        }
      }
    }
  }
}

void midpoint_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "midpoint_definition");
  for (const auto& [r, id] : relations(ctx, Predicate::IsMidpointOfLine)) {
    const auto& m = r->args[0][0];
    const auto &a = r->args[1][0], &b = r->args[1][1];
    out.equation({m, a, b}, {id}, {{len(a, m), 1}, {len(m, b), -1}}, 0);
    out.equation({m, a, b}, {id}, {{len(a, b), 1}, {len(a, m), -2}}, 0);
  }
}

void median_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "median_definition");
  for (const auto& [r, id] : relations(ctx, Predicate::IsMedianOfTriangle)) {
    const auto& d = r->args[0][1];
    const auto &b = r->args[1][1], &c = r->args[1][2];
    out.equation({r->args[0][0], d, b, c}, {id}, {{len(b, d), 1}, {len(d, c), -1}}, 0);
    out.equation({r->args[0][0], d, b, c}, {id}, {{len(b, c), 1}, {len(b, d), -2}}, 0);
  }
}

void angle_bisector(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "angle_bisector");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::IsBisectorOfAngle)) {
    const auto& d = r->args[0][1];
    const auto &b = r->args[1][0], &a = r->args[1][1], &c = r->args[1][2];
    out.equation({a, d, b, c}, {id}, {{f.angle(b, a, d), 1}, {f.angle(d, a, c), -1}}, 0);
    out.equation({a, d, b, c}, {id}, {{f.angle(b, a, c), 1}, {f.angle(b, a, d), -2}}, 0);
  }
}

void altitude_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "altitude_definition");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::IsAltitudeOfTriangle)) {
    const auto &a = r->args[0][0], &d = r->args[0][1];
    for (std::size_t k = 1; k < 3; ++k) {
      const auto& x = r->args[1][k];
      if (x != d && f.collinear(r->args[1][1], r->args[1][2], d)) out.value({a, d, x}, {id}, f.angle(a, d, x), 90);
    }
  }
}

void altitude_area(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "altitude_area");
  for (const auto& [r, id] : relations(ctx, Predicate::IsAltitudeOfTriangle)) {
    const auto &a = r->args[0][0], &d = r->args[0][1];
    const auto &b = r->args[1][1], &c = r->args[1][2];
    out.equation({a, d, b, c}, {id},
                 {{Figure::polygon(SymbolKind::Area, r->args[1]), 1}, {len(a, d), -1}, {len(b, c), -1}},
                 Number::ratio(1, 2), EquationShape::ProductRatio);
  }
}

void isosceles_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "isosceles_definition");
  for (const auto& [r, id] : relations(ctx, Predicate::IsoscelesTriangle)) {
    const auto& t = r->args[0];
    out.equation(t, {id}, {{len(t[0], t[1]), 1}, {len(t[0], t[2]), -1}}, 0);
  }
}

void isosceles_base_angles(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "isosceles_base_angles");
  for (const auto& [r, id] : relations(ctx, Predicate::IsoscelesTriangle)) {
    const auto& t = r->args[0];
    out.equation(t, {id}, {{ctx.figure.angle(t[0], t[1], t[2]), 1}, {ctx.figure.angle(t[0], t[2], t[1]), -1}}, 0);
  }
}

void equilateral_triangle(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "equilateral_triangle");
  for (const auto& [r, id] : relations(ctx, Predicate::EquilateralTriangle)) {
    const auto& t = r->args[0];
    out.equation(t, {id}, {{len(t[0], t[1]), 1}, {len(t[1], t[2]), -1}}, 0);
    out.equation(t, {id}, {{len(t[1], t[2]), 1}, {len(t[2], t[0]), -1}}, 0);
    for (int k = 0; k < 3; ++k) {
      out.value(t, {id}, ctx.figure.angle(t[(k + 2) % 3], t[k], t[(k + 1) % 3]), 60);
    }
  }
}

void right_triangle_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "right_triangle_definition");
  for (const auto& [r, id] : relations(ctx, Predicate::RightTriangle)) {
    const auto& t = r->args[0];
    out.value(t, {id}, ctx.figure.angle(t[0], t[1], t[2]), 90);
  }
}

void pythagorean(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "pythagorean");
  for (const auto& [r, id] : relations(ctx, Predicate::RightTriangle)) {
    const auto& t = r->args[0];
    out.equation(t, {id}, {{len(t[0], t[1]), 1}, {len(t[1], t[2]), 1}, {len(t[0], t[2]), -1}}, 0,
                 EquationShape::SumOfSquares);
  }
}

void right_triangle_area(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "right_triangle_area");
  for (const auto& [r, id] : relations(ctx, Predicate::RightTriangle)) {
    const auto& t = r->args[0];
    out.equation(t, {id},
                 {{Figure::polygon(SymbolKind::Area, t), 1}, {len(t[0], t[1]), -1}, {len(t[1], t[2]), -1}},
                 Number::ratio(1, 2), EquationShape::ProductRatio);
  }
}

void right_triangle_judgment(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "right_triangle_judgment");
  const auto& f = ctx.figure;
  for (const auto& [a, b, c] : f.triangles()) {
    const std::array<PointLabel, 3> t{a, b, c};
    for (int k = 0; k < 3; ++k) {
      const auto &u = t[(k + 1) % 3], &v = t[k], &w = t[(k + 2) % 3];
      auto fact = value_fact(ctx, f.angle(u, v, w));
      if (!fact || !approx_equal(value_at(ctx, *fact), Number(90), 1e-9)) continue;
      PointTuple tri{std::min(u, w), v, std::max(u, w)};
      out.relation(tri, merged({*fact}, triangle_sources(f, a, b, c)), {Predicate::RightTriangle, {tri}});
    }
  }
}

void parallelogram_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "parallelogram_definition");
  for (const auto& [r, id] : relations(ctx, Predicate::Parallelogram)) {
    const auto& q = r->args[0];
    out.relation(q, {id}, {Predicate::ParallelBetweenLine, {{q[0], q[1]}, {q[3], q[2]}}});
    out.relation(q, {id}, {Predicate::ParallelBetweenLine, {{q[0], q[3]}, {q[1], q[2]}}});
  }
}

void parallelogram_properties(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "parallelogram_properties");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::Parallelogram)) {
    const auto& q = r->args[0];
    out.equation(q, {id}, {{len(q[0], q[1]), 1}, {len(q[2], q[3]), -1}}, 0);
    out.equation(q, {id}, {{len(q[0], q[3]), 1}, {len(q[1], q[2]), -1}}, 0);
    out.equation(q, {id}, {{f.angle(q[3], q[0], q[1]), 1}, {f.angle(q[1], q[2], q[3]), -1}}, 0);
    out.equation(q, {id}, {{f.angle(q[0], q[1], q[2]), 1}, {f.angle(q[2], q[3], q[0]), -1}}, 0);
  }
}

void parallelogram_diagonal_bisection(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "parallelogram_diagonal_bisection");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::Parallelogram)) {
    const auto& q = r->args[0];
    auto d1 = f.line_through(q[0], q[2]), d2 = f.line_through(q[1], q[3]);
    if (!d1 || !d2 || *d1 == *d2) continue;
    for (const auto& e : f.lines()[static_cast<std::size_t>(*d1)].points) {
      if (f.index_on(*d2, e) < 0 || !f.between(q[0], e, q[2]) || !f.between(q[1], e, q[3])) continue;
      auto src = merged({id}, merged(line_sources(f, *d1), line_sources(f, *d2)));
      out.equation({q[0], q[1], q[2], q[3], e}, src, {{len(q[0], e), 1}, {len(e, q[2]), -1}}, 0);
      out.equation({q[0], q[1], q[2], q[3], e}, src, {{len(q[1], e), 1}, {len(e, q[3]), -1}}, 0);
    }
  }
}

void rectangle_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "rectangle_definition");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::Rectangle)) {
    const auto& q = r->args[0];
    out.relation(q, {id}, {Predicate::Parallelogram, {q}});
    for (int k = 0; k < 4; ++k) out.value(q, {id}, f.angle(q[(k + 3) % 4], q[k], q[(k + 1) % 4]), 90);
    if (f.connected(q[0], q[2]) && f.connected(q[1], q[3])) {
      out.equation(q, {id}, {{len(q[0], q[2]), 1}, {len(q[1], q[3]), -1}}, 0);
    }
  }
}

void rectangle_area(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "rectangle_area");
  for (const auto& [r, id] : relations(ctx, Predicate::Rectangle)) {
    const auto& q = r->args[0];
    out.equation(q, {id},
                 {{Figure::polygon(SymbolKind::Area, q), 1}, {len(q[0], q[1]), -1}, {len(q[1], q[2]), -1}}, 1,
                 EquationShape::ProductRatio);
  }
}

void square_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "square_definition");
  for (const auto& [r, id] : relations(ctx, Predicate::Square)) {
    const auto& q = r->args[0];
    out.relation(q, {id}, {Predicate::Rectangle, {q}});
    for (int k = 0; k < 3; ++k) {
      out.equation(q, {id}, {{len(q[k], q[k + 1]), 1}, {len(q[k + 1], q[(k + 2) % 4]), -1}}, 0);
    }
  }
}

void similar_triangle_angles(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "similar_triangle_angles");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::SimilarBetweenTriangle)) {
    const auto &s = r->args[0], &t = r->args[1];
    PointTuple binding = s;
    binding.insert(binding.end(), t.begin(), t.end());
    for (int k = 0; k < 3; ++k) {
      int i = (k + 2) % 3, j = (k + 1) % 3;
      out.equation(binding, {id}, {{f.angle(s[i], s[k], s[j]), 1}, {f.angle(t[i], t[k], t[j]), -1}}, 0);
    }
  }
}

void similar_triangle_sides(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "similar_triangle_sides");
  for (const auto& [r, id] : relations(ctx, Predicate::SimilarBetweenTriangle)) {
    const auto &s = r->args[0], &t = r->args[1];
    PointTuple binding = s;
    binding.insert(binding.end(), t.begin(), t.end());
    for (int k = 0; k < 2; ++k) {
      int j = k + 1, l = (k + 2) % 3;
      // s_k s_j / t_k t_j = s_j s_l / t_j t_l
      out.equation(binding, {id},
                   {{len(s[k], s[j]), 1}, {len(t[j], t[l]), 1}, {len(t[k], t[j]), -1}, {len(s[j], s[l]), -1}}, 1,
                   EquationShape::ProductRatio);
    }
  }
}

void congruent_triangle(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "congruent_triangle");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::CongruentBetweenTriangle)) {
    const auto &s = r->args[0], &t = r->args[1];
    PointTuple binding = s;
    binding.insert(binding.end(), t.begin(), t.end());
    for (int k = 0; k < 3; ++k) {
      int j = (k + 1) % 3, i = (k + 2) % 3;
      out.equation(binding, {id}, {{len(s[k], s[j]), 1}, {len(t[k], t[j]), -1}}, 0);
      out.equation(binding, {id}, {{f.angle(s[i], s[k], s[j]), 1}, {f.angle(t[i], t[k], t[j]), -1}}, 0);
    }
  }
}

// ---- circle rules ------------------------------------------------------------

Symbol radius(const PointLabel& o) { return {SymbolKind::Radius, {o}}; }
Symbol arc(const PointLabel& o, const PointLabel& a, const PointLabel& b) { return {SymbolKind::ArcMeasure, {o, a, b}}; }

std::vector<int> circle_sources(const Figure& f, const Circle& c, const std::vector<std::pair<PointLabel, PointLabel>>& segs) {
  return merged({c.source}, f.sources_of(segs));
}

void radius_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "radius_definition");
  const auto& f = ctx.figure;
  for (const auto& c : f.circles()) {
    for (const auto& p : c.points) {
      if (!f.connected(c.centre, p)) continue;
      out.equation({c.centre, p}, circle_sources(f, c, {{c.centre, p}}), {{len(c.centre, p), 1}, {radius(c.centre), -1}},
                   0);
    }
  }
}

void diameter_definition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "diameter_definition");
  for (const auto& c : ctx.figure.circles()) {
    out.equation({c.centre}, {c.source},
                 {{Symbol{SymbolKind::Diameter, {c.centre}}, 1}, {radius(c.centre), -2}}, 0);
  }
}

void diameter_properties(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "diameter_properties");
  for (const auto& [r, id] : relations(ctx, Predicate::IsDiameterOfCircle)) {
    const auto &a = r->args[0][0], &b = r->args[0][1], &o = r->args[1][0];
    out.equation({a, b, o}, {id}, {{len(a, b), 1}, {Symbol{SymbolKind::Diameter, {o}}, -1}}, 0);
  }
}

void thales(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "thales");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::IsDiameterOfCircle)) {
    const auto &a = r->args[0][0], &b = r->args[0][1], &o = r->args[1][0];
    const Circle* c = f.circle(o);
    if (!c) continue;
    for (const auto& p : c->points) {
      if (p == a || p == b || !f.connected(p, a) || !f.connected(p, b)) continue;
      out.value({a, p, b}, merged({id}, circle_sources(f, *c, {{p, a}, {p, b}})), f.angle(a, p, b), 90);
    }
  }
}

void arc_addition(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "arc_addition");
  for (const auto& c : ctx.figure.circles()) {
    const auto& p = c.points;
    std::size_t n = p.size();
    if (n < 2) continue;
    Terms whole;
    for (std::size_t i = 0; i < n; ++i) whole.emplace_back(arc(c.centre, p[i], p[(i + 1) % n]), 1);
    out.equation({c.centre}, {c.source}, whole, 360);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t span = 2; span < n; ++span) {
        Terms terms{{arc(c.centre, p[i], p[(i + span) % n]), 1}};
        for (std::size_t s = 0; s < span; ++s) terms.emplace_back(arc(c.centre, p[(i + s) % n], p[(i + s + 1) % n]), -1);
        out.equation({c.centre, p[i], p[(i + span) % n]}, {c.source}, terms, 0);
      }
    }
  }
}

// Index order on the circle: does the counter-clockwise run from a to b pass c?
bool ccw_contains(const PointTuple& pts, const PointLabel& a, const PointLabel& b, const PointLabel& c) {
  auto pos = [&](const PointLabel& x) { return static_cast<long>(std::find(pts.begin(), pts.end(), x) - pts.begin()); };
  long n = static_cast<long>(pts.size());
  long ia = pos(a), ib = pos(b), ic = pos(c);
  long run = (ib - ia + n) % n, to_c = (ic - ia + n) % n;
  return to_c > 0 && to_c < run;
}

void inscribed_angle(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "inscribed_angle");
  const auto& f = ctx.figure;
  for (const auto& c : f.circles()) {
    for (const auto& v : c.points) {
      for (const auto& a : c.points) {
        for (const auto& b : c.points) {
          if (a >= b || a == v || b == v || !f.connected(v, a) || !f.connected(v, b)) continue;
          Symbol subtended = ccw_contains(c.points, a, b, v) ? arc(c.centre, b, a) : arc(c.centre, a, b);
          out.equation({a, v, b, c.centre}, circle_sources(f, c, {{v, a}, {v, b}}),
                       {{f.angle(a, v, b), 2}, {subtended, -1}}, 0);
        }
      }
    }
  }
}

void central_angle(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "central_angle");
  const auto& f = ctx.figure;
  for (const auto& c : f.circles()) {
    for (const auto& a : c.points) {
      for (const auto& b : c.points) {
        if (a == b || !f.connected(c.centre, a) || !f.connected(c.centre, b)) continue;
        auto target = f.angle(a, c.centre, b);
        if (!undetermined(ctx, target)) continue;
        auto fact = value_fact(ctx, arc(c.centre, a, b));
        if (!fact) continue;
        auto v = recompute("central_angle", *target, {{arc(c.centre, a, b), value_at(ctx, *fact)}});
        if (v) out.value({a, c.centre, b}, merged({*fact}, circle_sources(f, c, {{c.centre, a}, {c.centre, b}})), target, *v);
      }
    }
  }
}

void arc_length(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "arc_length");
  for (std::size_t s = 0; s < ctx.store.symbol_count(); ++s) {
    Symbol sym = ctx.store.symbol(static_cast<int>(s));
    if (sym.kind != SymbolKind::ArcLength) continue;
    const auto& o = sym.args[0];
    const Circle* c = ctx.figure.circle(o);
    if (!c) continue;
    out.equation(sym.args, {c->source}, {{sym, 1}, {radius(o), -1}, {arc(o, sym.args[1], sym.args[2]), -1}},
                 Number::real(kDegree), EquationShape::ProductRatio);
  }
}

void tangent_radius(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "tangent_radius");
  const auto& f = ctx.figure;
  for (const auto& [r, id] : relations(ctx, Predicate::IsTangentOfCircle)) {
    const auto &p = r->args[0][0], &a = r->args[0][1], &o = r->args[1][0];
    if (!f.connected(a, o) || !f.connected(a, p)) continue;
    out.value({p, a, o}, merged({id}, f.sources_of({{a, o}, {a, p}})), f.angle(p, a, o), 90);
  }
}

// ---- computing rules ---------------------------------------------------------

void law_of_cosines(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "law_of_cosines");
  const auto& f = ctx.figure;
  for (const auto& [a, b, c] : f.triangles()) {
    const std::array<PointLabel, 3> t{a, b, c};
    auto src = triangle_sources(f, a, b, c);
    for (int k = 0; k < 3; ++k) {
      const auto &v = t[k], &u = t[(k + 1) % 3], &w = t[(k + 2) % 3];
      auto ang = f.angle(u, v, w);
      auto fu = value_fact(ctx, len(v, u)), fw = value_fact(ctx, len(v, w)), fo = value_fact(ctx, len(u, w));
      auto fa = value_fact(ctx, ang);
      if (fu && fw && fa && !fo) {
        auto target = len(u, w);
        auto val = recompute("law_of_cosines", target,
                             {{len(v, u), value_at(ctx, *fu)}, {len(v, w), value_at(ctx, *fw)}, {*ang, value_at(ctx, *fa)}});
        std::vector<int> prem{*fu, *fw, *fa};
        prem.insert(prem.end(), src.begin(), src.end());
        if (val) out.value({a, b, c}, prem, target, *val);
      }
      if (fu && fw && fo && !fa && ang) {
        auto val = recompute("law_of_cosines", *ang,
                             {{len(u, w), value_at(ctx, *fo)}, {len(v, u), value_at(ctx, *fu)}, {len(v, w), value_at(ctx, *fw)}});
        std::vector<int> prem{*fo, *fu, *fw};
        prem.insert(prem.end(), src.begin(), src.end());
        if (val) out.value({a, b, c}, prem, ang, *val);
      }
    }
  }
}

void law_of_sines(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "law_of_sines");
  const auto& f = ctx.figure;
  for (const auto& [a, b, c] : f.triangles()) {
    const std::array<PointLabel, 3> t{a, b, c};
    auto src = triangle_sources(f, a, b, c);
    auto angle_at = [&](int k) { return f.angle(t[(k + 1) % 3], t[k], t[(k + 2) % 3]); };
    auto side_opposite = [&](int k) { return len(t[(k + 1) % 3], t[(k + 2) % 3]); };
    for (int x = 0; x < 3; ++x) {
      auto fs = value_fact(ctx, side_opposite(x)), fx = value_fact(ctx, angle_at(x));
      if (!fs || !fx) continue;
      for (int y = 0; y < 3; ++y) {
        if (y == x) continue;
        auto fy = value_fact(ctx, angle_at(y));
        auto target = side_opposite(y);
        if (!fy || !undetermined(ctx, target)) continue;
        auto val = recompute("law_of_sines", target,
                             {{side_opposite(x), value_at(ctx, *fs)}, {*angle_at(x), value_at(ctx, *fx)},
                              {*angle_at(y), value_at(ctx, *fy)}});
        std::vector<int> prem{*fs, *fx, *fy};
        prem.insert(prem.end(), src.begin(), src.end());
        if (val) out.value({a, b, c}, prem, target, *val);
      }
    }
  }
}

void heron_area(Context& ctx, std::vector<Application>& apps) {
  Out out(ctx, apps, "heron_area");
  for (const auto& [t, src] : triangle_polygons(ctx)) {
    auto target = Figure::polygon(SymbolKind::Area, {t[0], t[1], t[2]});
    if (!undetermined(ctx, target)) continue;
    auto f0 = value_fact(ctx, len(t[0], t[1])), f1 = value_fact(ctx, len(t[1], t[2])), f2 = value_fact(ctx, len(t[2], t[0]));
    if (!f0 || !f1 || !f2) continue;
    auto val = recompute("heron_area", target,
                         {{len(t[0], t[1]), value_at(ctx, *f0)},
                          {len(t[1], t[2]), value_at(ctx, *f1)},
                          {len(t[2], t[0]), value_at(ctx, *f2)}});
    std::vector<int> prem{*f0, *f1, *f2};
    prem.insert(prem.end(), src.begin(), src.end());
    if (val) out.value({t[0], t[1], t[2]}, prem, target, *val);
  }
}

}  // namespace

std::optional<Number> recompute(const std::string& theorem, const Symbol& target,
                                const std::vector<std::pair<Symbol, Number>>& in) {
  if (theorem == "central_angle" && in.size() == 1) {
    Number arc_value = in[0].second;
    if (arc_value.value() < 180.0) return arc_value;
    if (arc_value.value() > 180.0) return Number(360) - arc_value;
    return std::nullopt;
  }
  if (theorem == "law_of_cosines" && in.size() == 3) {
    if (target.kind == SymbolKind::Angle) {
      const Number &o = in[0].second, &u = in[1].second, &w = in[2].second;
      Number cosine = (u * u + w * w - o * o) / (Number(2) * u * w);
      double c = cosine.value();
      if (c <= -1.0 || c >= 1.0) return std::nullopt;
      if (cosine == Number(0)) return Number(90);
      if (cosine == Number::ratio(1, 2)) return Number(60);
      if (cosine == Number::ratio(-1, 2)) return Number(120);
      return settle(Number::real(std::acos(c) / kDegree));
    }
    const Number &u = in[0].second, &w = in[1].second, &ang = in[2].second;
    Number sq = u * u + w * w - Number(2) * u * w * cos_deg(ang);
    if (sq.value() <= 0.0) return std::nullopt;
    return settle(sq.sqrt());
  }
  if (theorem == "law_of_sines" && in.size() == 3) {
    Number sx = sin_deg(in[1].second);
    if (sx.value() <= 0.0) return std::nullopt;
    return settle(in[0].second * sin_deg(in[2].second) / sx);
  }
  if (theorem == "heron_area" && in.size() == 3) {
    const Number &a = in[0].second, &b = in[1].second, &c = in[2].second;
    Number s = (a + b + c) / Number(2);
    Number sq = s * (s - a) * (s - b) * (s - c);
    if (sq.value() <= 0.0) return std::nullopt;
    return settle(sq.sqrt());
  }
  return std::nullopt;
}

const std::vector<TheoremRule>& theorem_library() {
  static const std::vector<TheoremRule> rules = [] {
    std::vector<TheoremRule> r;
    auto add = [&](std::string id, void (*fn)(Context&, std::vector<Application>&)) { r.push_back({std::move(id), fn}); };
    add("triangle_angle_sum", triangle_angle_sum);
    add("exterior_angle", exterior_angle);
    add("vertical_angles", vertical_angles);
    add("linear_pair", linear_pair);
    add("angle_addition", angle_addition);
    add("segment_addition", segment_addition);
    add("polygon_perimeter", polygon_perimeter);
    add("perpendicular_definition", perpendicular_definition);
    r.push_back({"parallel_alternate_angles", [](Context& c, std::vector<Application>& a) { parallel_rules(c, a, 0); }});
    r.push_back({"parallel_corresponding_angles", [](Context& c, std::vector<Application>& a) { parallel_rules(c, a, 1); }});
    r.push_back({"parallel_cointerior_angles", [](Context& c, std::vector<Application>& a) { parallel_rules(c, a, 2); }});
    add("midpoint_definition", midpoint_definition);
    add("median_definition", median_definition);
    add("angle_bisector", angle_bisector);
    add("altitude_definition", altitude_definition);
    add("altitude_area", altitude_area);
    add("isosceles_definition", isosceles_definition);
    add("isosceles_base_angles", isosceles_base_angles);
    add("equilateral_triangle", equilateral_triangle);
    add("right_triangle_definition", right_triangle_definition);
    add("right_triangle_judgment", right_triangle_judgment);
    add("pythagorean", pythagorean);
    add("right_triangle_area", right_triangle_area);
    add("parallelogram_definition", parallelogram_definition);
    add("parallelogram_properties", parallelogram_properties);
    add("parallelogram_diagonal_bisection", parallelogram_diagonal_bisection);
    add("rectangle_definition", rectangle_definition);
    add("rectangle_area", rectangle_area);
    add("square_definition", square_definition);
    add("similar_triangle_angles", similar_triangle_angles);
    add("similar_triangle_sides", similar_triangle_sides);
    add("congruent_triangle", congruent_triangle);
    add("radius_definition", radius_definition);
    add("diameter_definition", diameter_definition);
    add("diameter_properties", diameter_properties);
    add("thales", thales);
    add("arc_addition", arc_addition);
    add("inscribed_angle", inscribed_angle);
    add("central_angle", central_angle);
    add("arc_length", arc_length);
    add("tangent_radius", tangent_radius);
    add("law_of_cosines", law_of_cosines);
    add("law_of_sines", law_of_sines);
    add("heron_area", heron_area);
    return r;
  }();
  return rules;
}

std::vector<std::string> theorem_ids() {
  std::vector<std::string> ids;
  for (const auto& r : theorem_library()) ids.push_back(r.id);
  ids.push_back("solve_equations");
  return ids;
}

}  // namespace geoforge::engine
