#include <png.h>

#include <algorithm>
#include <cstdio>
#include <numbers>

#include "detail.hpp"

namespace geoforge::render {

using detail::P;
using namespace detail;

namespace {

struct Prim {
  enum class Kind { Line, Ring, Arc, Dot };
  Kind kind = Kind::Line;
  P a, b;  // line ends, or centre in a
  double r = 0, start = 0, sweep = 0, width = 1;
};

struct Group {
  std::string attrs;  // extra SVG attributes, empty for figure strokes
  std::vector<Prim> prims;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::vector<Group> build_scene(const DiagramSpec& spec, const LabelSet& labels) {
  const Transform t = fit(spec);
  const double w = stroke_width(spec), tw = text_stroke(spec), cap = cap_height(spec);
  std::vector<P> px;
  for (const auto& c : spec.coords) px.push_back(t(c));

  Group figure;
  for (const auto& s : spec.segments) figure.prims.push_back({Prim::Kind::Line, px[s.a], px[s.b], 0, 0, 0, w});
  for (const auto& c : spec.circles) figure.prims.push_back({Prim::Kind::Ring, px[c.centre], {}, c.radius * t.k, 0, 0, w});
  for (const auto& a : spec.annotations) {
    const auto& args = a.fact.args;
    switch (a.fact.quantity) {
      case cdl::Quantity::RadiusOfCircle:
      case cdl::Quantity::DiameterOfCircle: {
        int o = point_index(spec, args[0]);
        double r = circle_radius(spec, o) * t.k;
        P u = radius_direction(spec, t, o, r);
        P from = a.fact.quantity == cdl::Quantity::DiameterOfCircle ? sub(px[o], mul(u, r)) : px[o];
        figure.prims.push_back({Prim::Kind::Line, from, add(px[o], mul(u, r)), 0, 0, 0, w});
        break;
      }
      case cdl::Quantity::MeasureOfAngle: {
        auto wd = wedge(spec, t, args);
        figure.prims.push_back({Prim::Kind::Arc, wd.vertex, {}, 1.1 * cap, wd.start, wd.sweep, tw});
        break;
      }
      default:
        break;
    }
  }
  for (const auto& p : px) figure.prims.push_back({Prim::Kind::Dot, p, {}, dot_radius(spec), 0, 0, 0});

  std::vector<Group> out{std::move(figure)};
  for (const auto& l : labels.labels) {
    Group g;
    if (l.role == Label::Role::Point) {
      g.attrs = " class=\"point\" data-text=\"" + l.text + "\"";
    } else {
      const auto& a = spec.annotations[l.annotation];
      g.attrs = " class=\"value\" data-text=\"" + l.text + "\" data-fact=\"" + cdl::print_statement(a.fact) + "\"";
    }
    const double x = (l.box.x0 + l.box.x1) / 2 - text_width(l.text, cap) / 2;
    const double baseline = (l.box.y0 + l.box.y1) / 2 + cap / 2 + 0.05 * cap;
    for (const auto& poly : text_strokes(l.text, x, baseline, cap)) {
      for (std::size_t i = 1; i < poly.size(); ++i) g.prims.push_back({Prim::Kind::Line, poly[i - 1], poly[i], 0, 0, 0, tw});
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::string to_svg(const DiagramSpec& spec, const std::vector<Group>& scene) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
       std::to_string(spec.height) + "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
       std::to_string(spec.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& g : scene) {
    s += "<g" + g.attrs + " fill=\"none\" stroke=\"black\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n";
    for (const auto& p : g.prims) {
      const std::string sw = " stroke-width=\"" + fmt(p.width) + "\"";
      switch (p.kind) {
        case Prim::Kind::Line:
          s += "<line x1=\"" + fmt(p.a.x) + "\" y1=\"" + fmt(p.a.y) + "\" x2=\"" + fmt(p.b.x) + "\" y2=\"" + fmt(p.b.y) +
               "\"" + sw + "/>\n";
          break;
        case Prim::Kind::Ring:
          s += "<circle cx=\"" + fmt(p.a.x) + "\" cy=\"" + fmt(p.a.y) + "\" r=\"" + fmt(p.r) + "\"" + sw + "/>\n";
          break;
        case Prim::Kind::Arc: {
          P from = add(p.a, P{p.r * std::cos(p.start), p.r * std::sin(p.start)});
          P to = add(p.a, P{p.r * std::cos(p.start + p.sweep), p.r * std::sin(p.start + p.sweep)});
          s += "<path d=\"M " + fmt(from.x) + " " + fmt(from.y) + " A " + fmt(p.r) + " " + fmt(p.r) + " 0 " +
               (p.sweep > std::numbers::pi ? "1" : "0") + " 1 " + fmt(to.x) + " " + fmt(to.y) + "\"" + sw + "/>\n";
          break;
        }
        case Prim::Kind::Dot:
          s += "<circle cx=\"" + fmt(p.a.x) + "\" cy=\"" + fmt(p.a.y) + "\" r=\"" + fmt(p.r) +
               "\" fill=\"black\" stroke=\"none\"/>\n";
          break;
      }
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

double segment_distance(P p, P a, P b) {
  P ab = sub(b, a);
  double len2 = dot(ab, ab);
  double u = len2 > 0 ? std::clamp(dot(sub(p, a), ab) / len2, 0.0, 1.0) : 0.0;
  return norm(sub(p, add(a, mul(ab, u))));
}

bool in_sweep(double angle, double start, double sweep) {
  const double two_pi = 2 * std::numbers::pi;
  return std::fmod(angle - start + 2 * two_pi, two_pi) <= sweep;
}

Raster rasterize(const DiagramSpec& spec, const std::vector<Group>& scene) {
  const int W = spec.width, H = spec.height;
  std::vector<float> ink(static_cast<std::size_t>(W) * H, 0.0f);
  auto cover = [&](double x0, double y0, double x1, double y1, auto&& coverage) {
    int ix0 = std::max(0, static_cast<int>(std::floor(x0))), iy0 = std::max(0, static_cast<int>(std::floor(y0)));
    int ix1 = std::min(W - 1, static_cast<int>(std::ceil(x1))), iy1 = std::min(H - 1, static_cast<int>(std::ceil(y1)));
    for (int y = iy0; y <= iy1; ++y) {
      for (int x = ix0; x <= ix1; ++x) {
        double c = std::clamp(coverage(P{x + 0.5, y + 0.5}), 0.0, 1.0);
        float& v = ink[static_cast<std::size_t>(y) * W + x];
        v = std::max(v, static_cast<float>(c));
      }
    }
  };
  for (const auto& g : scene) {
    for (const auto& p : g.prims) {
      const double half = p.width / 2 + 1.0;
      switch (p.kind) {
        case Prim::Kind::Line:
          cover(std::min(p.a.x, p.b.x) - half, std::min(p.a.y, p.b.y) - half, std::max(p.a.x, p.b.x) + half,
                std::max(p.a.y, p.b.y) + half,
                [&](P q) { return p.width / 2 + 0.5 - segment_distance(q, p.a, p.b); });
          break;
        case Prim::Kind::Ring:
          cover(p.a.x - p.r - half, p.a.y - p.r - half, p.a.x + p.r + half, p.a.y + p.r + half,
                [&](P q) { return p.width / 2 + 0.5 - std::fabs(norm(sub(q, p.a)) - p.r); });
          break;
        case Prim::Kind::Arc: {
          P e0 = add(p.a, P{p.r * std::cos(p.start), p.r * std::sin(p.start)});
          P e1 = add(p.a, P{p.r * std::cos(p.start + p.sweep), p.r * std::sin(p.start + p.sweep)});
          cover(p.a.x - p.r - half, p.a.y - p.r - half, p.a.x + p.r + half, p.a.y + p.r + half, [&](P q) {
            P v = sub(q, p.a);
            double d = in_sweep(std::atan2(v.y, v.x), p.start, p.sweep) ? std::fabs(norm(v) - p.r)
                                                                          : std::min(norm(sub(q, e0)), norm(sub(q, e1)));
            return p.width / 2 + 0.5 - d;
          });
          break;
        }
        case Prim::Kind::Dot:
          cover(p.a.x - p.r - 1, p.a.y - p.r - 1, p.a.x + p.r + 1, p.a.y + p.r + 1,
                [&](P q) { return p.r + 0.5 - norm(sub(q, p.a)); });
          break;
      }
    }
  }
  Raster r;
  r.width = W;
  r.height = H;
  r.gray.resize(ink.size());
  for (std::size_t i = 0; i < ink.size(); ++i) r.gray[i] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - ink[i])));
  return r;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Raster& r) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw std::runtime_error("png encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        v->insert(v->end(), data, data + n);
      },
      nullptr);
  png_set_IHDR(png, info, r.width, r.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 9);
  png_write_info(png, info);
  for (int y = 0; y < r.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(r.gray.data() + static_cast<std::size_t>(y) * r.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

RenderedDiagram render_diagram(const DiagramSpec& spec) {
  canvas_width(spec.height);
  if (spec.width != canvas_width(spec.height)) throw std::invalid_argument("canvas is not 4:3");
  RenderedDiagram out;
  out.labels = place_labels(spec);
  if (out.labels.overflow) {
    for (const auto& l : out.labels.labels) {
      if (l.overflow) throw RenderError("AnnotationOverflow", "no room for label '" + l.text + "' in " + spec.id);
    }
  }
  auto scene = build_scene(spec, out.labels);
  out.svg = to_svg(spec, scene);
  out.raster = rasterize(spec, scene);
  out.png = encode_png(out.raster);
  return out;
}

}  // namespace geoforge::render
