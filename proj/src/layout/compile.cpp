#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "geoforge/engine.hpp"
#include "geoforge/layout.hpp"

namespace geoforge::layout {

std::string_view name_of(ResidualKind k) {
  switch (k) {
    case ResidualKind::Collinear: return "Collinear";
    case ResidualKind::OnCircle: return "OnCircle";
    case ResidualKind::Perpendicular: return "Perpendicular";
    case ResidualKind::Parallel: return "Parallel";
    case ResidualKind::EqualLength: return "EqualLength";
    case ResidualKind::FixedLength: return "FixedLength";
    case ResidualKind::FixedAngle: return "FixedAngle";
    case ResidualKind::EqualAngle: return "EqualAngle";
    case ResidualKind::Midpoint: return "Midpoint";
    case ResidualKind::Tangent: return "Tangent";
    case ResidualKind::NonDegeneracy: return "NonDegeneracy";
  }
  return "?";
}

std::string_view name_of(Strictness s) { return s == Strictness::Incidence ? "Incidence" : "Metric"; }

Strictness strictness_of(ResidualKind k) {
  switch (k) {
    case ResidualKind::EqualLength:
    case ResidualKind::FixedLength:
    case ResidualKind::FixedAngle:
    case ResidualKind::EqualAngle: return Strictness::Metric;
    default: return Strictness::Incidence;
  }
}

double Canvas::diagonal() const { return std::hypot(width, height); }

int ConstraintSystem::index_of(const cdl::PointLabel& p) const {
  auto it = std::find(points.begin(), points.end(), p);
  return it == points.end() ? -1 : static_cast<int>(it - points.begin());
}

bool ConstraintSystem::uses_scale() const {
  return std::any_of(residuals.begin(), residuals.end(),
                     [](const Residual& r) { return r.kind == ResidualKind::FixedLength; });
}

namespace {

class Compiler {
 public:
  explicit Compiler(ConstraintSystem& s) : s_(s) {}

  int pt(const cdl::PointLabel& p) {
    int i = s_.index_of(p);
    if (i >= 0) return i;
    s_.points.push_back(p);
    return static_cast<int>(s_.points.size()) - 1;
  }

  int circle(const cdl::PointLabel& centre) {
    pt(centre);
    auto it = std::find(s_.circles.begin(), s_.circles.end(), centre);
    if (it != s_.circles.end()) return static_cast<int>(it - s_.circles.begin());
    s_.circles.push_back(centre);
    return static_cast<int>(s_.circles.size()) - 1;
  }

  Residual& add(ResidualKind kind, const cdl::PointTuple& labels, std::string source, double target = 0.0) {
    Residual r;
    r.kind = kind;
    for (const auto& l : labels) r.points.push_back(pt(l));
    r.target = target;
    r.source = std::move(source);
    s_.residuals.push_back(std::move(r));
    return s_.residuals.back();
  }

  void construction(const cdl::ConstructionFact& c) {
    const auto text = cdl::print_statement(c);
    switch (c.kind) {
      case cdl::ConstructionKind::Shape:
        for (const auto& e : c.args) {
          pt(e[0]);
          pt(e[1]);
        }
        break;
      case cdl::ConstructionKind::Collinear: {
        const auto& p = c.args[0];
        for (std::size_t i = 2; i < p.size(); ++i) add(ResidualKind::Collinear, {p[0], p[i - 1], p[i]}, text);
        for (std::size_t i = 2; i < p.size(); ++i) {
          add(ResidualKind::Collinear, {p[i - 2], p[i - 1], p[i]}, text).order = true;
        }
        break;
      }
      case cdl::ConstructionKind::Cocircular: {
        const auto& o = c.args[0][0];
        const auto& p = c.args.size() > 1 ? c.args[1] : cdl::PointTuple{};
        int k = circle(o);
        for (const auto& q : p) add(ResidualKind::OnCircle, {o, q}, text).circle = k;
        // Three points have one cyclic order up to reflection; beyond that
        // every triple in listed order must turn counter-clockwise.
        for (std::size_t i = 0; p.size() >= 4 && i < p.size(); ++i) {
          for (std::size_t j = i + 1; j < p.size(); ++j) {
            for (std::size_t l = j + 1; l < p.size(); ++l) {
              auto& r = add(ResidualKind::OnCircle, {p[i], p[j], p[l]}, text);
              r.circle = k;
              r.order = true;
            }
          }
        }
        break;
      }
    }
  }

  void relation(const cdl::RelationFact& f) {
    using cdl::Predicate;
    const auto text = cdl::print_statement(f);
    const auto& a = f.args;
    auto seg = [&](std::size_t i) { return a[i]; };
    switch (f.predicate) {
      case Predicate::ParallelBetweenLine:
        add(ResidualKind::Parallel, {seg(0)[0], seg(0)[1], seg(1)[0], seg(1)[1]}, text);
        break;
      case Predicate::PerpendicularBetweenLine:
        add(ResidualKind::Perpendicular, {seg(0)[0], seg(0)[1], seg(1)[0], seg(1)[1]}, text);
        break;
      case Predicate::IsMidpointOfLine:
        add(ResidualKind::Midpoint, {a[0][0], a[1][0], a[1][1]}, text);
        break;
      case Predicate::IsBisectorOfAngle: {
        const auto &v = a[0][0], &d = a[0][1], &b = a[1][0], &c = a[1][2];
        add(ResidualKind::EqualAngle, {b, v, d, d, v, c}, text);
        break;
      }
      case Predicate::IsAltitudeOfTriangle: {
        const auto &top = a[0][0], &foot = a[0][1];
        const auto& t = a[1];
        cdl::PointTuple base;
        for (const auto& q : t) {
          if (q != top) base.push_back(q);
        }
        if (base.size() == 2) add(ResidualKind::Perpendicular, {top, foot, base[0], base[1]}, text);
        break;
      }
      case Predicate::IsMedianOfTriangle: {
        const auto &top = a[0][0], &foot = a[0][1];
        cdl::PointTuple base;
        for (const auto& q : a[1]) {
          if (q != top) base.push_back(q);
        }
        if (base.size() == 2) add(ResidualKind::Midpoint, {foot, base[0], base[1]}, text);
        break;
      }
      case Predicate::IsoscelesTriangle: {
        const auto& t = a[0];
        add(ResidualKind::EqualLength, {t[0], t[1], t[0], t[2]}, text);
        break;
      }
      case Predicate::EquilateralTriangle: {
        const auto& t = a[0];
        add(ResidualKind::EqualLength, {t[0], t[1], t[1], t[2]}, text);
        add(ResidualKind::EqualLength, {t[1], t[2], t[2], t[0]}, text);
        break;
      }
      case Predicate::RightTriangle: {
        const auto& t = a[0];
        add(ResidualKind::FixedAngle, {t[0], t[1], t[2]}, text, 90.0);
        break;
      }
      case Predicate::Parallelogram: {
        const auto& q = a[0];
        add(ResidualKind::Parallel, {q[0], q[1], q[3], q[2]}, text);
        add(ResidualKind::Parallel, {q[0], q[3], q[1], q[2]}, text);
        break;
      }
      case Predicate::Rectangle:
      case Predicate::Square: {
        const auto& q = a[0];
        if (f.predicate == Predicate::Rectangle) {
          add(ResidualKind::EqualLength, {q[0], q[1], q[3], q[2]}, text);
          add(ResidualKind::EqualLength, {q[0], q[3], q[1], q[2]}, text);
        } else {
          for (std::size_t i = 0; i < 4; ++i) {
            add(ResidualKind::EqualLength, {q[i], q[(i + 1) % 4], q[(i + 1) % 4], q[(i + 2) % 4]}, text);
          }
        }
        for (std::size_t i = 0; i < 4; ++i) {
          add(ResidualKind::FixedAngle, {q[(i + 3) % 4], q[i], q[(i + 1) % 4]}, text, 90.0);
        }
        break;
      }
      case Predicate::IsDiameterOfCircle:
        add(ResidualKind::Midpoint, {a[1][0], a[0][0], a[0][1]}, text);
        break;
      case Predicate::IsTangentOfCircle:
        add(ResidualKind::Tangent, {a[0][0], a[0][1], a[1][0]}, text);
        break;
      case Predicate::SimilarBetweenTriangle:
      case Predicate::CongruentBetweenTriangle: {
        const auto &s = a[0], &t = a[1];
        for (std::size_t k = 0; k < 3; ++k) {
          std::size_t i = (k + 2) % 3, j = (k + 1) % 3;
          if (f.predicate == Predicate::SimilarBetweenTriangle) {
            if (k < 2) add(ResidualKind::EqualAngle, {s[i], s[k], s[j], t[i], t[k], t[j]}, text);
          } else {
            add(ResidualKind::EqualLength, {s[k], s[j], t[k], t[j]}, text);
          }
        }
        break;
      }
      default:
        throw LayoutError("UnmappablePredicate", std::string(cdl::name_of(f.predicate)));
    }
  }

  void metric(const cdl::MetricFact& m) {
    const auto text = cdl::print_statement(m);
    const double v = m.value.value();
    switch (m.quantity) {
      case cdl::Quantity::LengthOfLine:
        add(ResidualKind::FixedLength, m.args, text, v);
        break;
      case cdl::Quantity::MeasureOfAngle:
        add(ResidualKind::FixedAngle, m.args, text, v);
        break;
      case cdl::Quantity::RadiusOfCircle:
      case cdl::Quantity::DiameterOfCircle: {
        int k = circle(m.args[0]);
        auto& r = add(ResidualKind::FixedLength, m.args, text, v);
        r.measure = m.quantity == cdl::Quantity::RadiusOfCircle ? Measure::Radius : Measure::Diameter;
        r.circle = k;
        break;
      }
      case cdl::Quantity::LengthOfArc: {
        int k = circle(m.args[0]);
        auto& r = add(ResidualKind::FixedLength, m.args, text, v);
        r.measure = Measure::ArcLength;
        r.circle = k;
        break;
      }
      case cdl::Quantity::PerimeterOf:
        add(ResidualKind::FixedLength, m.args, text, v).measure = Measure::Perimeter;
        break;
      case cdl::Quantity::AreaOf:
        add(ResidualKind::FixedLength, m.args, text, v).measure = Measure::Area;
        break;
    }
  }

 private:
  ConstraintSystem& s_;
};

}  // namespace

ConstraintSystem compile_constraints(const std::vector<cdl::ConstructionFact>& constructions,
                                     const std::vector<cdl::StatementFact>& facts, Canvas canvas) {
  ConstraintSystem s;
  s.canvas = canvas;
  Compiler c(s);
  cdl::FormalProblem shape;
  shape.constructions = constructions;
  for (const auto& con : constructions) c.construction(con);
  for (const auto& f : facts) {
    if (const auto* r = std::get_if<cdl::RelationFact>(&f)) {
      c.relation(*r);
      shape.text_facts.push_back(*r);
    }
  }
  for (const auto& f : facts) {
    if (const auto* m = std::get_if<cdl::MetricFact>(&f)) c.metric(*m);
  }

  // Floors: pairwise separation, triangle and face-corner areas, canvas margin.
  const int n = static_cast<int>(s.points.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Residual r;
      r.kind = ResidualKind::NonDegeneracy;
      r.points = {i, j};
      r.source = "separation";
      s.residuals.push_back(r);
    }
  }
  auto figure = engine::figure_of(shape);
  std::set<std::array<int, 3>> corners;
  auto corner = [&](const cdl::PointLabel& a, const cdl::PointLabel& b, const cdl::PointLabel& d) {
    if (figure.collinear(a, b, d)) return;
    std::array<int, 3> t{s.index_of(a), s.index_of(b), s.index_of(d)};
    if (std::find(t.begin(), t.end(), -1) != t.end()) return;
    std::sort(t.begin(), t.end());
    if (t[0] == t[1] || t[1] == t[2]) return;
    corners.insert(t);
  };
  for (const auto& t : figure.triangles()) corner(t[0], t[1], t[2]);
  for (const auto& f : figure.faces()) {
    const auto& v = f.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) corner(v[i], v[(i + 1) % v.size()], v[(i + 2) % v.size()]);
  }
  for (const auto& t : corners) {
    Residual r;
    r.kind = ResidualKind::NonDegeneracy;
    r.points = {t[0], t[1], t[2]};
    r.source = "area";
    s.residuals.push_back(r);
  }
  for (int i = 0; i < n; ++i) {
    Residual r;
    r.kind = ResidualKind::NonDegeneracy;
    r.points = {i};
    r.source = "canvas";
    s.residuals.push_back(r);
  }
  s.order = order_points(s);
  return s;
}

ConstraintSystem compile_constraints(const cdl::FormalProblem& p, Canvas canvas) {
  std::vector<cdl::StatementFact> facts;
  for (const auto& f : p.text_facts) facts.push_back(f);
  for (const auto& f : p.image_facts) facts.push_back(f);
  return compile_constraints(p.constructions, facts, canvas);
}

std::vector<int> order_points(const ConstraintSystem& s) {
  std::vector<int> degree(s.points.size(), 0);
  for (const auto& r : s.residuals) {
    if (r.kind == ResidualKind::NonDegeneracy) continue;
    std::set<int> touched(r.points.begin(), r.points.end());
    if (r.circle >= 0) touched.insert(s.index_of(s.circles[static_cast<std::size_t>(r.circle)]));
    for (int p : touched) ++degree[static_cast<std::size_t>(p)];
  }
  std::vector<int> order(s.points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (degree[ua] != degree[ub]) return degree[ua] > degree[ub];
    return s.points[ua] < s.points[ub];
  });
  return order;
}

}  // namespace geoforge::layout
