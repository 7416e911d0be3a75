#include <algorithm>
#include <numbers>
#include <set>

#include "detail.hpp"

namespace geoforge::render {

using detail::P;
using namespace detail;

int canvas_width(int short_edge) {
  if (std::find(std::begin(kShortEdges), std::end(kShortEdges), short_edge) == std::end(kShortEdges)) {
    throw std::invalid_argument("short edge must be 112, 224 or 336, got " + std::to_string(short_edge));
  }
  return static_cast<int>(std::lround(4.0 * short_edge / 3.0));
}

std::string annotation_text(const cdl::MetricFact& f) {
  auto s = f.value.display();
  if (cdl::is_angle(f.quantity)) s += "°";
  return s;
}

DiagramSpec make_diagram(const cdl::FormalProblem& p, const layout::ConstraintSystem& system,
                         const layout::LayoutSolution& solution, int short_edge) {
  DiagramSpec d;
  d.id = p.id;
  d.height = short_edge;
  d.width = canvas_width(short_edge);
  d.labels = system.points;
  d.coords = solution.coords;

  std::set<std::pair<int, int>> seen;
  auto segment = [&](const cdl::PointLabel& a, const cdl::PointLabel& b) {
    int i = system.index_of(a), j = system.index_of(b);
    if (i < 0 || j < 0 || i == j) return;
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second) return;
    d.segments.push_back({i, j});
  };
  for (const auto& c : p.constructions) {
    if (c.kind == cdl::ConstructionKind::Shape) {
      for (const auto& e : c.args) segment(e[0], e[1]);
    } else if (c.kind == cdl::ConstructionKind::Collinear) {
      const auto& run = c.args[0];
      for (std::size_t i = 1; i < run.size(); ++i) segment(run[i - 1], run[i]);
    }
  }
  for (const auto& m : cdl::metric_facts(p)) {
    if (m.quantity == cdl::Quantity::LengthOfLine) segment(m.args[0], m.args[1]);
  }
  if (p.goal && p.goal->quantity == cdl::Quantity::LengthOfLine) segment(p.goal->args[0], p.goal->args[1]);

  for (std::size_t k = 0; k < system.circles.size(); ++k) {
    d.circles.push_back({system.index_of(system.circles[k]), solution.radii.at(k)});
  }
  for (const auto& f : p.image_facts) {
    if (const auto* m = std::get_if<cdl::MetricFact>(&f)) d.annotations.push_back({*m, annotation_text(*m)});
  }
  return d;
}

Transform fit(const DiagramSpec& spec) {
  double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
  auto grow = [&](double x, double y, double r) {
    minx = std::min(minx, x - r);
    maxx = std::max(maxx, x + r);
    miny = std::min(miny, y - r);
    maxy = std::max(maxy, y + r);
  };
  for (const auto& c : spec.coords) grow(c.x, c.y, 0);
  for (const auto& c : spec.circles) grow(spec.coords[c.centre].x, spec.coords[c.centre].y, c.radius);
  if (spec.coords.empty()) grow(0, 0, 1);
  const double margin = 2.2 * cap_height(spec) + 2.0;
  const double bw = std::max(maxx - minx, 1e-9), bh = std::max(maxy - miny, 1e-9);
  Transform t;
  t.k = std::min((spec.width - 2 * margin) / bw, (spec.height - 2 * margin) / bh);
  t.x0 = minx;
  t.y0 = maxy;
  t.ox = (spec.width - bw * t.k) / 2.0;
  t.oy = (spec.height - bh * t.k) / 2.0;
  return t;
}

double cap_height(const DiagramSpec& spec) { return 0.05 * spec.height; }

namespace detail {

int point_index(const DiagramSpec& s, const cdl::PointLabel& l) {
  auto it = std::find(s.labels.begin(), s.labels.end(), l);
  if (it == s.labels.end()) throw std::invalid_argument("unknown point " + l);
  return static_cast<int>(it - s.labels.begin());
}

double circle_radius(const DiagramSpec& s, int centre) {
  for (const auto& c : s.circles) {
    if (c.centre == centre) return c.radius;
  }
  throw std::invalid_argument("no circle about " + s.labels.at(centre));
}

P radius_direction(const DiagramSpec& s, const Transform& t, int centre, double radius_px) {
  const P o = t(s.coords[centre]);
  std::vector<double> taken;
  for (std::size_t i = 0; i < s.coords.size(); ++i) {
    if (static_cast<int>(i) == centre) continue;
    P v = sub(t(s.coords[i]), o);
    if (norm(v) < 1e-9 || norm(v) > 1.5 * radius_px) continue;
    taken.push_back(std::atan2(v.y, v.x));
  }
  P best{std::cos(-std::numbers::pi / 4), std::sin(-std::numbers::pi / 4)};
  double best_gap = -1;
  for (int k = 0; k < 16; ++k) {
    double a = -std::numbers::pi / 4 + k * std::numbers::pi / 8;
    double gap = std::numbers::pi;
    for (double b : taken) {
      double d = std::remainder(a - b, 2 * std::numbers::pi);
      gap = std::min(gap, std::fabs(d));
    }
    if (gap > best_gap + 1e-9) {
      best_gap = gap;
      best = {std::cos(a), std::sin(a)};
    }
  }
  return best;
}

Wedge wedge(const DiagramSpec& s, const Transform& t, const cdl::PointTuple& args) {
  Wedge w;
  w.vertex = t(s.coords[point_index(s, args[1])]);
  w.ua = unit(sub(t(s.coords[point_index(s, args[0])]), w.vertex));
  w.uc = unit(sub(t(s.coords[point_index(s, args[2])]), w.vertex));
  const double ta = std::atan2(w.ua.y, w.ua.x), tc = std::atan2(w.uc.y, w.uc.x);
  const double two_pi = 2 * std::numbers::pi;
  double d = std::fmod(tc - ta + 2 * two_pi, two_pi);
  if (d <= std::numbers::pi) {
    w.start = ta;
    w.sweep = d;
  } else {
    w.start = tc;
    w.sweep = two_pi - d;
  }
  return w;
}

ArcSpan arc_span(const DiagramSpec& s, const Transform& t, const cdl::PointTuple& args) {
  int o = point_index(s, args[0]);
  ArcSpan a;
  a.centre = t(s.coords[o]);
  a.radius = circle_radius(s, o) * t.k;
  P pa = sub(t(s.coords[point_index(s, args[1])]), a.centre);
  P pb = sub(t(s.coords[point_index(s, args[2])]), a.centre);
  const double two_pi = 2 * std::numbers::pi;
  // Counter-clockwise in the plane is clockwise on screen: run from b to a.
  a.start = std::atan2(pb.y, pb.x);
  a.sweep = std::fmod(std::atan2(pa.y, pa.x) - a.start + 2 * two_pi, two_pi);
  return a;
}

}  // namespace detail

namespace {

bool seg_seg_cross(P a, P b, P c, P d) {
  auto orient = [](P p, P q, P r) { return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x); };
  double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

bool box_hits_segment(const Box& b, P p, P q) {
  if (b.contains(p.x, p.y) || b.contains(q.x, q.y)) return true;
  P c[4] = {{b.x0, b.y0}, {b.x1, b.y0}, {b.x1, b.y1}, {b.x0, b.y1}};
  for (int i = 0; i < 4; ++i) {
    if (seg_seg_cross(p, q, c[i], c[(i + 1) % 4])) return true;
  }
  return false;
}

class Placer {
 public:
  Placer(const DiagramSpec& s) : s_(s), t_(fit(s)), cap_(cap_height(s)) {
    for (const auto& c : s.coords) px_.push_back(t_(c));
    for (const auto& p : px_) centroid_ = add(centroid_, p);
    if (!px_.empty()) centroid_ = mul(centroid_, 1.0 / px_.size());
    for (const auto& seg : s.segments) lines_.push_back({px_[seg.a], px_[seg.b]});
    // Radius and diameter strokes belong to the drawing too.
    for (const auto& a : s.annotations) {
      if (a.fact.quantity != cdl::Quantity::RadiusOfCircle && a.fact.quantity != cdl::Quantity::DiameterOfCircle) continue;
      int o = point_index(s, a.fact.args[0]);
      double r = circle_radius(s, o) * t_.k;
      P u = radius_direction(s, t_, o, r);
      P from = a.fact.quantity == cdl::Quantity::DiameterOfCircle ? sub(px_[o], mul(u, r)) : px_[o];
      lines_.push_back({from, add(px_[o], mul(u, r))});
    }
  }

  LabelSet run() {
    LabelSet out;
    for (std::size_t i = 0; i < s_.labels.size(); ++i) place(out, point_label(static_cast<int>(i)));
    for (std::size_t i = 0; i < s_.annotations.size(); ++i) place(out, value_label(static_cast<int>(i)));
    return out;
  }

 private:
  struct Pending {
    Label label;
    std::vector<P> centres;  // preferred first, then 4 fallbacks
    std::vector<std::pair<P, P>> extra;  // rays the box must also avoid
  };

  double pad() const { return 1.0; }
  P size(const std::string& text) const {
    return {text_width(text, cap_) + 2 * pad(), cap_ * (1.0 + 0.6 / 6.0) + 2 * pad()};
  }
  // Distance from an anchor to a box centre so that the box clears the
  // anchor by `gap` along direction u.
  P beyond(P anchor, P u, P sz, double gap) const {
    double half = std::fabs(u.x) * sz.x / 2 + std::fabs(u.y) * sz.y / 2;
    return add(anchor, mul(u, gap + half));
  }

  Pending point_label(int i) {
    Pending p;
    p.label.role = Label::Role::Point;
    p.label.text = s_.labels[i];
    P sz = size(p.label.text);
    P u = norm(sub(px_[i], centroid_)) > 1e-6 ? unit(sub(px_[i], centroid_)) : P{0, -1};
    const double gap = dot_radius(s_) + 0.3 * cap_;
    for (double deg : {0.0, 45.0, -45.0, 90.0, -90.0}) {
      p.centres.push_back(beyond(px_[i], rotate(u, deg * std::numbers::pi / 180), sz, gap));
    }
    return p;
  }

  Pending value_label(int k) {
    const auto& a = s_.annotations[k];
    Pending p;
    p.label.role = Label::Role::Value;
    p.label.text = a.text;
    p.label.annotation = k;
    P sz = size(a.text);
    const double gap = 0.4 * cap_ + stroke_width(s_);
    const auto& args = a.fact.args;
    switch (a.fact.quantity) {
      case cdl::Quantity::LengthOfLine: {
        P pa = px_[point_index(s_, args[0])], pb = px_[point_index(s_, args[1])];
        along_segment(p, pa, pb, sz, gap);
        break;
      }
      case cdl::Quantity::RadiusOfCircle:
      case cdl::Quantity::DiameterOfCircle: {
        int o = point_index(s_, args[0]);
        double r = circle_radius(s_, o) * t_.k;
        P u = radius_direction(s_, t_, o, r);
        along_segment(p, px_[o], add(px_[o], mul(u, r)), sz, gap);
        break;
      }
      case cdl::Quantity::MeasureOfAngle: {
        auto w = wedge(s_, t_, args);
        P bis = norm(add(w.ua, w.uc)) > 1e-6 ? unit(add(w.ua, w.uc)) : P{w.ua.y, -w.ua.x};
        const double radius = 1.6 * cap_ + 0.5 * norm(sz);
        for (double f : {1.0, 1.5, 2.0, 2.6, 3.3}) p.centres.push_back(add(w.vertex, mul(bis, radius * f)));
        const double far = s_.width + s_.height;
        p.extra = {{w.vertex, add(w.vertex, mul(w.ua, far))}, {w.vertex, add(w.vertex, mul(w.uc, far))}};
        break;
      }
      case cdl::Quantity::LengthOfArc: {
        auto arc = arc_span(s_, t_, args);
        double mid = arc.start + arc.sweep / 2;
        for (double dt : {0.0, 0.3, -0.3}) {
          P u{std::cos(mid + dt), std::sin(mid + dt)};
          p.centres.push_back(beyond(add(arc.centre, mul(u, arc.radius)), u, sz, gap));
        }
        P u{std::cos(mid), std::sin(mid)};
        p.centres.push_back(beyond(add(arc.centre, mul(u, arc.radius)), u, sz, 2.5 * gap));
        p.centres.push_back(beyond(add(arc.centre, mul(u, arc.radius)), mul(u, -1), sz, gap));
        break;
      }
      case cdl::Quantity::PerimeterOf:
      case cdl::Quantity::AreaOf: {
        P c{0, 0};
        for (const auto& l : args) c = add(c, px_[point_index(s_, l)]);
        c = mul(c, 1.0 / static_cast<double>(args.size()));
        const double d = 1.5 * cap_;
        for (P off : {P{0, 0}, P{0, -d}, P{0, d}, P{-2 * d, 0}, P{2 * d, 0}}) p.centres.push_back(add(c, off));
        break;
      }
    }
    return p;
  }

  void along_segment(Pending& p, P a, P b, P sz, double gap) const {
    P m = mul(add(a, b), 0.5);
    P dir = unit(sub(b, a));
    P n{-dir.y, dir.x};
    double side = dot(sub(m, centroid_), n);
    if (std::fabs(side) < 1e-6) side = -n.y;  // prefer above
    if (side < 0) n = mul(n, -1);
    P span = sub(b, a);
    p.centres = {beyond(m, n, sz, gap), beyond(m, mul(n, -1), sz, gap), beyond(add(m, mul(span, 0.25)), n, sz, gap),
                 beyond(add(m, mul(span, -0.25)), n, sz, gap), beyond(m, n, sz, 2.5 * gap)};
  }

  Box box_at(P c, P sz) const { return {c.x - sz.x / 2, c.y - sz.y / 2, c.x + sz.x / 2, c.y + sz.y / 2}; }

  bool fits(const Box& b, const LabelSet& placed, const Pending& p) const {
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > s_.width || b.y1 > s_.height) return false;
    for (const auto& l : placed.labels) {
      if (l.box.intersects(b)) return false;
    }
    const double r = dot_radius(s_);
    for (const auto& q : px_) {
      if (Box{b.x0 - r, b.y0 - r, b.x1 + r, b.y1 + r}.contains(q.x, q.y)) return false;
    }
    for (const auto& [u, v] : lines_) {
      if (box_hits_segment(b, u, v)) return false;
    }
    for (const auto& [u, v] : p.extra) {
      if (box_hits_segment(b, u, v)) return false;
    }
    return true;
  }

  void place(LabelSet& out, Pending p) const {
    P sz = size(p.label.text);
    for (std::size_t c = 0; c < p.centres.size(); ++c) {
      Box b = box_at(p.centres[c], sz);
      if (fits(b, out, p)) {
        p.label.box = b;
        p.label.candidate = static_cast<int>(c);
        p.label.fallback = c > 0;
        out.labels.push_back(p.label);
        return;
      }
    }
    p.label.box = box_at(p.centres.front(), sz);
    p.label.fallback = true;
    p.label.overflow = true;
    out.overflow = true;
    out.labels.push_back(p.label);
  }

  const DiagramSpec& s_;
  Transform t_;
  double cap_;
  std::vector<P> px_;
  P centroid_{0, 0};
  std::vector<std::pair<P, P>> lines_;
};

}  // namespace

LabelSet place_labels(const DiagramSpec& spec) { return Placer(spec).run(); }

}  // namespace geoforge::render
