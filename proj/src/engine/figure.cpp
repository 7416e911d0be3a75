#include <algorithm>
#include <map>
#include <set>

#include "geoforge/engine.hpp"

namespace geoforge::engine {
namespace {

struct Sequence {
  PointTuple points;
  int source;
};

std::size_t shared_count(const PointTuple& a, const std::set<PointLabel>& b) {
  return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [&](const PointLabel& p) { return b.count(p); }));
}

// Merges an oriented sequence into the current line order. Consecutive pairs
// of both become precedence constraints; ties go to the smaller label.
PointTuple merge_order(const PointTuple& current, const PointTuple& next) {
  std::map<PointLabel, std::set<PointLabel>> succ;
  std::map<PointLabel, int> indeg;
  for (const auto* seq : {&current, &next}) {
    for (const auto& p : *seq) indeg.emplace(p, 0);
    for (std::size_t i = 0; i + 1 < seq->size(); ++i) {
      if (succ[(*seq)[i]].insert((*seq)[i + 1]).second) ++indeg[(*seq)[i + 1]];
    }
  }
  std::set<PointLabel> ready;
  for (const auto& [p, d] : indeg) {
    if (d == 0) ready.insert(p);
  }
  PointTuple out;
  while (!ready.empty()) {
    PointLabel p = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(p);
    for (const auto& q : succ[p]) {
      if (--indeg[q] == 0) ready.insert(q);
    }
  }
  if (out.size() != indeg.size()) {
    // Contradictory orders; keep the current line and append the rest.
    out = current;
    for (const auto& p : next) {
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
  }
  return out;
}

PointTuple oriented(const PointTuple& seq, const PointTuple& reference) {
  std::vector<int> pos;
  for (const auto& p : seq) {
    auto it = std::find(reference.begin(), reference.end(), p);
    if (it != reference.end()) pos.push_back(static_cast<int>(it - reference.begin()));
  }
  if (pos.size() >= 2 && pos[0] > pos[1]) return PointTuple(seq.rbegin(), seq.rend());
  return seq;
}

std::vector<Line> build_lines(std::vector<Sequence> seqs) {
  // Group sequences that share two or more points, to a fixpoint.
  struct Group {
    std::set<PointLabel> points;
    std::vector<std::size_t> members;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    groups.push_back({{seqs[i].points.begin(), seqs[i].points.end()}, {i}});
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < groups.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < groups.size() && !changed; ++j) {
        std::size_t shared = 0;
        for (const auto& p : groups[j].points) shared += groups[i].points.count(p);
        if (shared >= 2) {
          groups[i].points.insert(groups[j].points.begin(), groups[j].points.end());
          groups[i].members.insert(groups[i].members.end(), groups[j].members.begin(), groups[j].members.end());
          groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
        }
      }
    }
  }

  std::vector<Line> lines;
  for (auto& g : groups) {
    std::sort(g.members.begin(), g.members.end(), [&](std::size_t a, std::size_t b) {
      if (seqs[a].points.size() != seqs[b].points.size()) return seqs[a].points.size() > seqs[b].points.size();
      return a < b;
    });
    Line line;
    line.points = seqs[g.members[0]].points;
    line.sources.push_back(seqs[g.members[0]].source);
    std::vector<bool> used(g.members.size(), false);
    used[0] = true;
    for (std::size_t placed = 1; placed < g.members.size();) {
      std::set<PointLabel> have(line.points.begin(), line.points.end());
      bool progress = false;
      for (std::size_t k = 1; k < g.members.size(); ++k) {
        if (used[k]) continue;
        const auto& s = seqs[g.members[k]];
        if (shared_count(s.points, have) < 2) continue;
        line.points = merge_order(line.points, oriented(s.points, line.points));
        line.sources.push_back(s.source);
        used[k] = true;
        ++placed;
        progress = true;
        break;
      }
      if (!progress) {
        for (std::size_t k = 1; k < g.members.size(); ++k) {
          if (used[k]) continue;
          const auto& s = seqs[g.members[k]];
          line.points = merge_order(line.points, s.points);
          line.sources.push_back(s.source);
          used[k] = true;
          ++placed;
          break;
        }
      }
    }
    std::sort(line.sources.begin(), line.sources.end());
    line.sources.erase(std::unique(line.sources.begin(), line.sources.end()), line.sources.end());
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

Figure Figure::build(const std::vector<std::pair<cdl::ConstructionFact, int>>& constructions,
                     const std::vector<std::pair<cdl::RelationFact, int>>& relations) {
  Figure f;
  std::set<PointLabel> pts;
  std::vector<Sequence> seqs;
  for (const auto& [c, id] : constructions) {
    for (const auto& t : c.args) pts.insert(t.begin(), t.end());
    switch (c.kind) {
      case cdl::ConstructionKind::Shape: {
        Face face{{}, id};
        for (const auto& e : c.args) {
          if (e.size() == 2) seqs.push_back({e, id});
          if (!e.empty()) face.vertices.push_back(e[0]);
        }
        if (face.vertices.size() >= 3) f.faces_.push_back(std::move(face));
        break;
      }
      case cdl::ConstructionKind::Collinear:
        if (!c.args.empty()) seqs.push_back({c.args[0], id});
        break;
      case cdl::ConstructionKind::Cocircular: {
        if (c.args.size() != 2 || c.args[0].size() != 1) break;
        const auto& centre = c.args[0][0];
        auto it = std::find_if(f.circles_.begin(), f.circles_.end(), [&](const Circle& k) { return k.centre == centre; });
        if (it == f.circles_.end()) {
          f.circles_.push_back({centre, c.args[1], id});
        } else {
          for (const auto& p : c.args[1]) {
            if (std::find(it->points.begin(), it->points.end(), p) == it->points.end()) it->points.push_back(p);
          }
        }
        break;
      }
    }
  }
  for (const auto& [r, id] : relations) {
    const auto& a = r.args;
    switch (r.predicate) {
      case cdl::Predicate::IsMidpointOfLine:
        if (a.size() == 2 && a[0].size() == 1 && a[1].size() == 2) seqs.push_back({{a[1][0], a[0][0], a[1][1]}, id});
        break;
      case cdl::Predicate::IsMedianOfTriangle:
        if (a.size() == 2 && a[0].size() == 2 && a[1].size() == 3) seqs.push_back({{a[1][1], a[0][1], a[1][2]}, id});
        break;
      case cdl::Predicate::IsDiameterOfCircle:
        if (a.size() == 2 && a[0].size() == 2 && a[1].size() == 1) seqs.push_back({{a[0][0], a[1][0], a[0][1]}, id});
        break;
      default: break;
    }
  }
  f.points_.assign(pts.begin(), pts.end());
  f.lines_ = build_lines(std::move(seqs));

  const auto& p = f.points_;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      if (!f.connected(p[i], p[j])) continue;
      for (std::size_t k = j + 1; k < p.size(); ++k) {
        if (f.connected(p[i], p[k]) && f.connected(p[j], p[k]) && !f.collinear(p[i], p[j], p[k])) {
          f.triangles_.push_back({p[i], p[j], p[k]});
        }
      }
    }
  }
  return f;
}

std::optional<int> Figure::line_through(const PointLabel& a, const PointLabel& b) const {
  if (a == b) return std::nullopt;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    const auto& pts = lines_[i].points;
    if (std::find(pts.begin(), pts.end(), a) != pts.end() && std::find(pts.begin(), pts.end(), b) != pts.end()) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

int Figure::index_on(int line, const PointLabel& p) const {
  if (line < 0) return -1;
  const auto& pts = lines_[static_cast<std::size_t>(line)].points;
  auto it = std::find(pts.begin(), pts.end(), p);
  return it == pts.end() ? -1 : static_cast<int>(it - pts.begin());
}

bool Figure::between(const PointLabel& a, const PointLabel& b, const PointLabel& c) const {
  auto l = line_through(a, c);
  if (!l) return false;
  int ia = index_on(*l, a), ib = index_on(*l, b), ic = index_on(*l, c);
  return ib >= 0 && ((ia < ib && ib < ic) || (ic < ib && ib < ia));
}

bool Figure::collinear(const PointLabel& a, const PointLabel& b, const PointLabel& c) const {
  auto l = line_through(a, b);
  return l && index_on(*l, c) >= 0;
}

Ray Figure::ray(const PointLabel& vertex, const PointLabel& toward) const {
  auto l = line_through(vertex, toward);
  if (!l) return {vertex, -1, 0, toward};
  int iv = index_on(*l, vertex), it = index_on(*l, toward);
  Ray r{vertex, *l, it > iv ? 1 : -1, {}};
  r.rep = ray_points(r).front();
  return r;
}

PointTuple Figure::ray_points(const Ray& r) const {
  if (r.line < 0) return {r.rep};
  const auto& pts = lines_[static_cast<std::size_t>(r.line)].points;
  int iv = index_on(r.line, r.vertex);
  PointTuple out;
  if (r.dir > 0) {
    out.assign(pts.begin() + iv + 1, pts.end());
  } else {
    out.assign(pts.begin(), pts.begin() + iv);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Ray> Figure::rays_at(const PointLabel& vertex) const {
  std::vector<Ray> out;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    int iv = index_on(static_cast<int>(i), vertex);
    if (iv < 0) continue;
    int n = static_cast<int>(lines_[i].points.size());
    for (int dir : {-1, 1}) {
      if ((dir < 0 && iv == 0) || (dir > 0 && iv == n - 1)) continue;
      Ray r{vertex, static_cast<int>(i), dir, {}};
      r.rep = ray_points(r).front();
      out.push_back(r);
    }
  }
  return out;
}

bool Figure::opposite(const Ray& a, const Ray& b) const {
  return a.line >= 0 && a.line == b.line && a.vertex == b.vertex && a.dir == -b.dir;
}

std::optional<Symbol> Figure::angle(const Ray& a, const Ray& b) const {
  if (a.vertex != b.vertex || a == b || opposite(a, b)) return std::nullopt;
  if (a.line < 0 && b.line < 0 && a.rep == b.rep) return std::nullopt;
  auto lo = std::min(a.rep, b.rep), hi = std::max(a.rep, b.rep);
  return Symbol{SymbolKind::Angle, {lo, a.vertex, hi}};
}

std::optional<Symbol> Figure::angle(const PointLabel& a, const PointLabel& vertex, const PointLabel& c) const {
  if (a == vertex || c == vertex || a == c) return std::nullopt;
  return angle(ray(vertex, a), ray(vertex, c));
}

Symbol Figure::length(const PointLabel& a, const PointLabel& b) {
  return Symbol{SymbolKind::Length, {std::min(a, b), std::max(a, b)}};
}

Symbol Figure::polygon(SymbolKind kind, const PointTuple& cycle) { return Symbol{kind, cdl::canonical_cycle(cycle)}; }

std::vector<int> Figure::sources_of(const std::vector<std::pair<PointLabel, PointLabel>>& segments) const {
  std::vector<int> out;
  for (const auto& [a, b] : segments) {
    if (auto l = line_through(a, b)) {
      const auto& s = lines_[static_cast<std::size_t>(*l)].sources;
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

const Circle* Figure::circle(const PointLabel& centre) const {
  for (const auto& c : circles_) {
    if (c.centre == centre) return &c;
  }
  return nullptr;
}

std::string symbol_text(const Symbol& s) {
  std::string args;
  for (const auto& a : s.args) args += a;
  switch (s.kind) {
    case SymbolKind::Length: return "LengthOfLine(" + args + ")";
    case SymbolKind::Angle: return "MeasureOfAngle(" + args + ")";
    case SymbolKind::ArcMeasure: return "MeasureOfArc(" + args + ")";
    case SymbolKind::ArcLength: return "LengthOfArc(" + args + ")";
    case SymbolKind::Radius: return "RadiusOfCircle(" + args + ")";
    case SymbolKind::Diameter: return "DiameterOfCircle(" + args + ")";
    case SymbolKind::Perimeter: return "PerimeterOf(" + args + ")";
    case SymbolKind::Area: return "AreaOf(" + args + ")";
  }
  return "?";
}

std::optional<cdl::Quantity> quantity_of(SymbolKind k) {
  switch (k) {
    case SymbolKind::Length: return cdl::Quantity::LengthOfLine;
    case SymbolKind::Angle: return cdl::Quantity::MeasureOfAngle;
    case SymbolKind::ArcLength: return cdl::Quantity::LengthOfArc;
    case SymbolKind::Radius: return cdl::Quantity::RadiusOfCircle;
    case SymbolKind::Diameter: return cdl::Quantity::DiameterOfCircle;
    case SymbolKind::Perimeter: return cdl::Quantity::PerimeterOf;
    case SymbolKind::Area: return cdl::Quantity::AreaOf;
    case SymbolKind::ArcMeasure: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Symbol> symbol_for(const Figure& f, cdl::Quantity q, const PointTuple& args) {
  switch (q) {
    case cdl::Quantity::LengthOfLine:
      if (args.size() == 2 && args[0] != args[1]) return Figure::length(args[0], args[1]);
      return std::nullopt;
    case cdl::Quantity::MeasureOfAngle:
      if (args.size() == 3) return f.angle(args[0], args[1], args[2]);
      return std::nullopt;
    case cdl::Quantity::LengthOfArc:
      if (args.size() == 3) return Symbol{SymbolKind::ArcLength, args};
      return std::nullopt;
    case cdl::Quantity::RadiusOfCircle:
      if (args.size() == 1) return Symbol{SymbolKind::Radius, args};
      return std::nullopt;
    case cdl::Quantity::DiameterOfCircle:
      if (args.size() == 1) return Symbol{SymbolKind::Diameter, args};
      return std::nullopt;
    case cdl::Quantity::PerimeterOf:
      if (args.size() >= 3) return Figure::polygon(SymbolKind::Perimeter, args);
      return std::nullopt;
    case cdl::Quantity::AreaOf:
      if (args.size() >= 3) return Figure::polygon(SymbolKind::Area, args);
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::pair<cdl::Quantity, PointTuple>> head_of(const Symbol& s) {
  auto q = quantity_of(s.kind);
  if (!q) return std::nullopt;
  return std::make_pair(*q, s.args);
}

}  // namespace geoforge::engine
