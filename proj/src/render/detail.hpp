#pragma once

#include <cmath>

#include "geoforge/render.hpp"

namespace geoforge::render::detail {

using P = layout::Point2;

inline P add(P a, P b) { return {a.x + b.x, a.y + b.y}; }
inline P sub(P a, P b) { return {a.x - b.x, a.y - b.y}; }
inline P mul(P a, double k) { return {a.x * k, a.y * k}; }
inline double dot(P a, P b) { return a.x * b.x + a.y * b.y; }
inline double norm(P a) { return std::hypot(a.x, a.y); }
inline P unit(P a) {
  double n = norm(a);
  return n > 1e-12 ? mul(a, 1.0 / n) : P{0, -1};
}
inline P rotate(P a, double rad) {
  return {a.x * std::cos(rad) - a.y * std::sin(rad), a.x * std::sin(rad) + a.y * std::cos(rad)};
}

inline double stroke_width(const DiagramSpec& s) { return s.height / 112.0; }
inline double text_stroke(const DiagramSpec& s) { return s.height / 160.0; }
inline double dot_radius(const DiagramSpec& s) { return s.height / 90.0; }

int point_index(const DiagramSpec& s, const cdl::PointLabel& l);

// Pixel direction from a circle centre along which its radius or diameter is
// drawn, chosen clear of the other points around the centre.
P radius_direction(const DiagramSpec& s, const Transform& t, int centre, double radius_px);

// Pixel-space wedge mark for an angle annotation: start angle and sweep
// (radians, screen coordinates), always the interior (< 180) side.
struct Wedge {
  P vertex;
  P ua, uc;  // unit rays
  double start = 0, sweep = 0;
};
Wedge wedge(const DiagramSpec& s, const Transform& t, const cdl::PointTuple& args);

// Pixel-space arc from a to b counter-clockwise about centre (as seen on
// screen after the y flip this is clockwise in screen angle).
struct ArcSpan {
  P centre;
  double radius = 0, start = 0, sweep = 0;
};
ArcSpan arc_span(const DiagramSpec& s, const Transform& t, const cdl::PointTuple& args);

double circle_radius(const DiagramSpec& s, int centre);

}  // namespace geoforge::render::detail
