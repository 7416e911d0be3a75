#pragma once

// Diagram rendering: an accepted layout becomes a monochrome SVG and an 8-bit
// grayscale PNG, with the image-channel values written onto the figure.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoforge/cdl.hpp"
#include "geoforge/layout.hpp"

namespace geoforge::render {

inline constexpr int kShortEdges[] = {112, 224, 336};

// Landscape 4:3: round(4/3 * short_edge). Throws std::invalid_argument for a
// short edge outside kShortEdges.
int canvas_width(int short_edge);

struct Segment {
  int a = 0, b = 0;  // indices into DiagramSpec::labels
};

struct CircleMark {
  int centre = 0;
  double radius = 0.0;  // layout units
};

struct Annotation {
  cdl::MetricFact fact;
  std::string text;
};

struct DiagramSpec {
  std::string id;
  std::vector<cdl::PointLabel> labels;
  std::vector<layout::Point2> coords;  // layout units, y up
  std::vector<Segment> segments;
  std::vector<CircleMark> circles;
  std::vector<Annotation> annotations;
  int width = 299;
  int height = 224;
};

// Strokes every shape edge, collinear run, circle and mentioned segment;
// annotates the image-channel metric facts only.
DiagramSpec make_diagram(const cdl::FormalProblem& p, const layout::ConstraintSystem& system,
                         const layout::LayoutSolution& solution, int short_edge);

std::string annotation_text(const cdl::MetricFact& f);

// Layout units to pixels: uniform scale, y flipped, bounding box centred.
struct Transform {
  double k = 1.0;
  double x0 = 0.0, y0 = 0.0;  // layout point mapped to the pixel origin
  double ox = 0.0, oy = 0.0;
  layout::Point2 operator()(const layout::Point2& p) const { return {ox + (p.x - x0) * k, oy + (y0 - p.y) * k}; }
};

Transform fit(const DiagramSpec& spec);

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool intersects(const Box& o) const { return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1; }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct Label {
  enum class Role { Point, Value };
  Role role = Role::Point;
  std::string text;
  int annotation = -1;  // index into DiagramSpec::annotations for values
  Box box;              // pixels
  int candidate = 0;    // 0 = preferred spot, 1..4 = fallback offsets
  bool fallback = false;
  bool overflow = false;  // no candidate fitted; kept at the preferred spot
};

struct LabelSet {
  std::vector<Label> labels;
  bool overflow = false;
};

// Text metrics shared by placement and drawing.
double cap_height(const DiagramSpec& spec);
double text_width(const std::string& text, double cap);

LabelSet place_labels(const DiagramSpec& spec);

struct RenderError : std::runtime_error {
  std::string kind;  // AnnotationOverflow
  RenderError(std::string k, const std::string& what) : std::runtime_error(what), kind(std::move(k)) {}
};

struct Raster {
  int width = 0, height = 0;
  std::vector<std::uint8_t> gray;  // row-major, 255 = white
};

struct RenderedDiagram {
  std::string svg;
  std::vector<std::uint8_t> png;
  Raster raster;
  LabelSet labels;
};

// Throws RenderError(AnnotationOverflow).
RenderedDiagram render_diagram(const DiagramSpec& spec);

// Glyph strokes for one string in pixels: polylines starting at (x, baseline).
std::vector<std::vector<layout::Point2>> text_strokes(const std::string& text, double x, double baseline, double cap);

std::vector<std::uint8_t> encode_png(const Raster& r);

}  // namespace geoforge::render
