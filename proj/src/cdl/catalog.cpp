#include <algorithm>
#include <array>

#include "geoforge/cdl.hpp"

namespace geoforge::cdl {
namespace {

constexpr std::array<Predicate, kPredicateCount> kPredicates = {
    Predicate::ParallelBetweenLine,  Predicate::PerpendicularBetweenLine, Predicate::IsMidpointOfLine,
    Predicate::IsBisectorOfAngle,    Predicate::IsAltitudeOfTriangle,     Predicate::IsMedianOfTriangle,
    Predicate::IsoscelesTriangle,    Predicate::EquilateralTriangle,      Predicate::RightTriangle,
    Predicate::Parallelogram,        Predicate::Rectangle,                Predicate::Square,
    Predicate::IsDiameterOfCircle,   Predicate::IsTangentOfCircle,        Predicate::SimilarBetweenTriangle,
    Predicate::CongruentBetweenTriangle,
};

constexpr std::array<Quantity, kQuantityCount> kQuantities = {
    Quantity::LengthOfLine,     Quantity::MeasureOfAngle, Quantity::LengthOfArc, Quantity::RadiusOfCircle,
    Quantity::DiameterOfCircle, Quantity::PerimeterOf,    Quantity::AreaOf,
};

const std::array<Signature, kPredicateCount>& predicate_table() {
  static const std::array<Signature, kPredicateCount> table = {{
      {"ParallelBetweenLine", {2, 2}},
      {"PerpendicularBetweenLine", {2, 2}},
      {"IsMidpointOfLine", {1, 2}},
      {"IsBisectorOfAngle", {2, 3}},
      {"IsAltitudeOfTriangle", {2, 3}},
      {"IsMedianOfTriangle", {2, 3}},
      {"IsoscelesTriangle", {3}},
      {"EquilateralTriangle", {3}},
      {"RightTriangle", {3}},
      {"Parallelogram", {4}},
      {"Rectangle", {4}},
      {"Square", {4}},
      {"IsDiameterOfCircle", {2, 1}},
      {"IsTangentOfCircle", {2, 1}},
      {"SimilarBetweenTriangle", {3, 3}},
      {"CongruentBetweenTriangle", {3, 3}},
  }};
  return table;
}

const std::array<Signature, kQuantityCount>& quantity_table() {
  static const std::array<Signature, kQuantityCount> table = {{
      {"LengthOfLine", {2}},
      {"MeasureOfAngle", {3}},
      {"LengthOfArc", {3}},
      {"RadiusOfCircle", {1}},
      {"DiameterOfCircle", {1}},
      {"PerimeterOf", {0}},
      {"AreaOf", {0}},
  }};
  return table;
}

}  // namespace

std::span<const Predicate> all_predicates() { return kPredicates; }
std::span<const Quantity> all_quantities() { return kQuantities; }

const Signature& signature(Predicate p) { return predicate_table()[static_cast<std::size_t>(p)]; }
const Signature& signature(Quantity q) { return quantity_table()[static_cast<std::size_t>(q)]; }
std::string_view name_of(Predicate p) { return signature(p).name; }
std::string_view name_of(Quantity q) { return signature(q).name; }

std::string_view name_of(ConstructionKind k) {
  switch (k) {
    case ConstructionKind::Shape: return "Shape";
    case ConstructionKind::Collinear: return "Collinear";
    case ConstructionKind::Cocircular: return "Cocircular";
  }
  return "?";
}

std::optional<Predicate> predicate_from_name(std::string_view name) {
  for (Predicate p : kPredicates) {
    if (name_of(p) == name) return p;
  }
  return std::nullopt;
}

std::optional<Quantity> quantity_from_name(std::string_view name) {
  for (Quantity q : kQuantities) {
    if (name_of(q) == name) return q;
  }
  return std::nullopt;
}

bool is_angle(Quantity q) { return q == Quantity::MeasureOfAngle; }

}  // namespace geoforge::cdl
