#include <map>

#include "geoforge/render.hpp"

namespace geoforge::render {
namespace {

// Single-line sans glyphs on a grid 6 units tall, y down from the cap line.
struct Glyph {
  double width;
  std::vector<std::vector<layout::Point2>> strokes;
};

using P = layout::Point2;
using Poly = std::vector<P>;

const Poly kO = {{1, 0}, {3, 0}, {4, 1}, {4, 5}, {3, 6}, {1, 6}, {0, 5}, {0, 1}, {1, 0}};
const Poly kP = {{0, 6}, {0, 0}, {3, 0}, {4, 1}, {4, 2}, {3, 3}, {0, 3}};

const std::map<char32_t, Glyph>& glyphs() {
  static const std::map<char32_t, Glyph> g = {
      {U'A', {4, {{{0, 6}, {2, 0}, {4, 6}}, {{0.7, 4}, {3.3, 4}}}}},
      {U'B', {4, {{{0, 6}, {0, 0}, {3, 0}, {4, 1}, {4, 2}, {3, 3}, {0, 3}}, {{3, 3}, {4, 4}, {4, 5}, {3, 6}, {0, 6}}}}},
      {U'C', {4, {{{4, 1}, {3, 0}, {1, 0}, {0, 1}, {0, 5}, {1, 6}, {3, 6}, {4, 5}}}}},
      {U'D', {4, {{{0, 0}, {0, 6}, {2.5, 6}, {4, 4.5}, {4, 1.5}, {2.5, 0}, {0, 0}}}}},
      {U'E', {4, {{{4, 0}, {0, 0}, {0, 6}, {4, 6}}, {{0, 3}, {3, 3}}}}},
      {U'F', {4, {{{4, 0}, {0, 0}, {0, 6}}, {{0, 3}, {3, 3}}}}},
      {U'G', {4, {{{4, 1}, {3, 0}, {1, 0}, {0, 1}, {0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 3.5}, {2.5, 3.5}}}}},
      {U'H', {4, {{{0, 0}, {0, 6}}, {{4, 0}, {4, 6}}, {{0, 3}, {4, 3}}}}},
      {U'I', {2, {{{0, 0}, {2, 0}}, {{1, 0}, {1, 6}}, {{0, 6}, {2, 6}}}}},
      {U'J', {4, {{{4, 0}, {4, 5}, {3, 6}, {1, 6}, {0, 5}}}}},
      {U'K', {4, {{{0, 0}, {0, 6}}, {{4, 0}, {0, 4}}, {{1.3, 3}, {4, 6}}}}},
      {U'L', {4, {{{0, 0}, {0, 6}, {4, 6}}}}},
      {U'M', {4, {{{0, 6}, {0, 0}, {2, 3}, {4, 0}, {4, 6}}}}},
      {U'N', {4, {{{0, 6}, {0, 0}, {4, 6}, {4, 0}}}}},
      {U'O', {4, {kO}}},
      {U'P', {4, {kP}}},
      {U'Q', {4, {kO, {{2.5, 4.5}, {4, 6}}}}},
      {U'R', {4, {kP, {{2, 3}, {4, 6}}}}},
      {U'S', {4, {{{4, 1}, {3, 0}, {1, 0}, {0, 1}, {0, 2}, {1, 3}, {3, 3}, {4, 4}, {4, 5}, {3, 6}, {1, 6}, {0, 5}}}}},
      {U'T', {4, {{{0, 0}, {4, 0}}, {{2, 0}, {2, 6}}}}},
      {U'U', {4, {{{0, 0}, {0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 0}}}}},
      {U'V', {4, {{{0, 0}, {2, 6}, {4, 0}}}}},
      {U'W', {4, {{{0, 0}, {1, 6}, {2, 3}, {3, 6}, {4, 0}}}}},
      {U'X', {4, {{{0, 0}, {4, 6}}, {{4, 0}, {0, 6}}}}},
      {U'Y', {4, {{{0, 0}, {2, 3}, {4, 0}}, {{2, 3}, {2, 6}}}}},
      {U'Z', {4, {{{0, 0}, {4, 0}, {0, 6}, {4, 6}}}}},
      {U'0', {4, {kO, {{3.5, 0.8}, {0.5, 5.2}}}}},
      {U'1', {3, {{{0.5, 1}, {1.5, 0}, {1.5, 6}}, {{0.5, 6}, {2.5, 6}}}}},
      {U'2', {4, {{{0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 2}, {0, 6}, {4, 6}}}}},
      {U'3', {4, {{{0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 2}, {3, 3}, {1.5, 3}}, {{3, 3}, {4, 4}, {4, 5}, {3, 6}, {1, 6}, {0, 5}}}}},
      {U'4', {4, {{{3, 6}, {3, 0}, {0, 4}, {4, 4}}}}},
      {U'5', {4, {{{4, 0}, {0, 0}, {0, 3}, {3, 3}, {4, 4}, {4, 5}, {3, 6}, {1, 6}, {0, 5}}}}},
      {U'6', {4, {{{3, 0}, {1, 0}, {0, 1}, {0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 4}, {3, 3}, {0, 3}}}}},
      {U'7', {4, {{{0, 0}, {4, 0}, {1.5, 6}}}}},
      {U'8', {4, {{{1, 3}, {0, 2}, {0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 2}, {3, 3}, {1, 3}, {0, 4}, {0, 5}, {1, 6}, {3, 6},
                   {4, 5}, {4, 4}, {3, 3}}}}},
      {U'9', {4, {{{4, 3}, {1, 3}, {0, 2}, {0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 5}, {3, 6}, {1, 6}}}}},
      {U'.', {1, {{{0.5, 5.5}, {0.5, 6}}}}},
      {U'-', {3, {{{0, 3}, {3, 3}}}}},
      {U'/', {3, {{{0, 6}, {3, 0}}}}},
      {U'=', {3, {{{0, 2}, {3, 2}}, {{0, 4}, {3, 4}}}}},
      {U'°', {2, {{{0.5, 0}, {1.5, 0}, {2, 0.5}, {2, 1.5}, {1.5, 2}, {0.5, 2}, {0, 1.5}, {0, 0.5}, {0.5, 0}}}}},
      // The bar over the radicand is added by text_strokes.
      {U'√', {3, {{{0, 3.5}, {0.8, 3}, {1.8, 6}, {3, -0.6}}}}},
  };
  return g;
}

std::vector<char32_t> decode(const std::string& s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    int n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    char32_t cp = n == 1 ? c : c & (0x3F >> (n - 1));
    for (int k = 1; k < n && i + k < s.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += n;
  }
  return out;
}

constexpr double kGap = 1.5;  // units between glyphs

const Glyph& glyph(char32_t c) {
  static const Glyph box = {4, {{{0, 0}, {4, 0}, {4, 6}, {0, 6}, {0, 0}}}};
  auto it = glyphs().find(c);
  return it == glyphs().end() ? box : it->second;
}

}  // namespace

double text_width(const std::string& text, double cap) {
  const double unit = cap / 6.0;
  double w = 0;
  auto cps = decode(text);
  for (std::size_t i = 0; i < cps.size(); ++i) w += glyph(cps[i]).width + (i + 1 < cps.size() ? kGap : 0.0);
  return w * unit;
}

std::vector<std::vector<layout::Point2>> text_strokes(const std::string& text, double x, double baseline, double cap) {
  const double unit = cap / 6.0;
  const double top = baseline - cap;
  std::vector<std::vector<layout::Point2>> out;
  auto cps = decode(text);
  double pen = x;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto& g = glyph(cps[i]);
    for (const auto& s : g.strokes) {
      Poly poly;
      for (const auto& p : s) poly.push_back({pen + p.x * unit, top + p.y * unit});
      out.push_back(std::move(poly));
    }
    pen += (g.width + kGap) * unit;
    if (cps[i] == U'√') {
      double end = x + text_width(text, cap);
      out.push_back({{pen - kGap * unit, top - 0.6 * unit}, {end, top - 0.6 * unit}});
    }
  }
  return out;
}

}  // namespace geoforge::render
