#pragma once

// Conditional Declaration Language: the formal representation of a geometry
// problem as construction, text-channel, image-channel and goal statements.
//
// Surface syntax, one statement per line, whitespace-insensitive:
//
//   Shape(AB,BC,CA)                       closed edge chain
//   Collinear(BDC)                        >= 3 points in line order
//   Cocircular(O,ABC)                     centre, then points counter-clockwise
//   ParallelBetweenLine(AB,CD)            relation from the fixed catalog
//   Equal(LengthOfLine(AB),5)             metric fact; values: 5, 2.5, 5/2
//   image: Equal(MeasureOfAngle(ABC),40)  fact delivered through the diagram
//   Value(MeasureOfAngle(ACB))            goal
//
// '#' starts a comment. Point labels are an uppercase letter optionally
// followed by digits, so "A1B" is the pair A1, B.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geoforge/number.hpp"

namespace geoforge::cdl {

using PointLabel = std::string;
using PointTuple = std::vector<PointLabel>;

enum class ConstructionKind { Shape, Collinear, Cocircular };

enum class Predicate {
  ParallelBetweenLine,
  PerpendicularBetweenLine,
  IsMidpointOfLine,
  IsBisectorOfAngle,
  IsAltitudeOfTriangle,
  IsMedianOfTriangle,
  IsoscelesTriangle,
  EquilateralTriangle,
  RightTriangle,
  Parallelogram,
  Rectangle,
  Square,
  IsDiameterOfCircle,
  IsTangentOfCircle,
  SimilarBetweenTriangle,
  CongruentBetweenTriangle,
};

enum class Quantity {
  LengthOfLine,
  MeasureOfAngle,
  LengthOfArc,
  RadiusOfCircle,
  DiameterOfCircle,
  PerimeterOf,
  AreaOf,
};

inline constexpr std::size_t kPredicateCount = 16;
inline constexpr std::size_t kQuantityCount = 7;

// Shape: args are directed edges (2 points each).
// Collinear: one tuple of >= 3 points.
// Cocircular: {centre}, {points...}.
struct ConstructionFact {
  ConstructionKind kind{};
  std::vector<PointTuple> args;
  friend bool operator==(const ConstructionFact&, const ConstructionFact&) = default;
};

struct RelationFact {
  Predicate predicate{};
  std::vector<PointTuple> args;
  friend bool operator==(const RelationFact&, const RelationFact&) = default;
};

struct MetricFact {
  Quantity quantity{};
  PointTuple args;
  Number value;
  friend bool operator==(const MetricFact&, const MetricFact&) = default;
};

struct Goal {
  Quantity quantity{};
  PointTuple args;
  friend bool operator==(const Goal&, const Goal&) = default;
};

using StatementFact = std::variant<RelationFact, MetricFact>;

struct FormalProblem {
  std::string id;
  std::vector<ConstructionFact> constructions;
  std::vector<StatementFact> text_facts;
  std::vector<StatementFact> image_facts;
  std::optional<Goal> goal;

  // Structural equality ignores the provenance id.
  bool same_structure(const FormalProblem& other) const;
};

// ---- catalog ---------------------------------------------------------------

// Per-argument point counts; 0 means "3 or more".
struct Signature {
  std::string_view name;
  std::vector<int> arity;
};

std::span<const Predicate> all_predicates();
std::span<const Quantity> all_quantities();
const Signature& signature(Predicate p);
const Signature& signature(Quantity q);
std::string_view name_of(Predicate p);
std::string_view name_of(Quantity q);
std::string_view name_of(ConstructionKind k);
std::optional<Predicate> predicate_from_name(std::string_view name);
std::optional<Quantity> quantity_from_name(std::string_view name);

bool is_angle(Quantity q);

// ---- parsing ---------------------------------------------------------------

struct Diagnostic {
  int line = 0;       // 1-based; 0 for whole-input problems
  std::string code;   // SyntaxError | UnknownPredicate | ArityMismatch
  std::string message;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ParseResult {
  FormalProblem problem;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

enum class Channel { Text, Image };

// One parsed statement, before it is placed into a problem.
using Statement = std::variant<ConstructionFact, StatementFact, Goal>;

// Thrown by parse_statement; parse_problem converts it into a Diagnostic.
struct CdlError {
  std::string code;
  std::string message;
};

// Parses a single statement (no channel prefix). Throws CdlError.
Statement parse_statement(std::string_view text);

// Splits "A1BC" into {"A1","B","C"}. Throws CdlError on stray characters.
PointTuple split_points(std::string_view text);

ParseResult parse_problem(std::string_view source, std::string id = {});

// FormalGeo-style annotation object: construction_cdl, text_cdl, image_cdl,
// goal_cdl (list of strings or a single string) and an optional id field
// (problem_id or id).
ParseResult parse_problem_json(const nlohmann::json& object, std::string fallback_id = {});

// ---- printing --------------------------------------------------------------

std::string print_statement(const ConstructionFact& f);
std::string print_statement(const RelationFact& f);
std::string print_statement(const MetricFact& f);
std::string print_statement(const StatementFact& f);
std::string print_statement(const Goal& g);
std::string print_problem(const FormalProblem& p);
nlohmann::json to_json(const FormalProblem& p);

// ---- validation ------------------------------------------------------------

enum class ViolationKind {
  UndeclaredPoint,
  ArityError,
  DuplicateFact,
  GoalStatedAsPremise,
  OutOfRange,
  InvalidConstruction,
};

std::string_view name_of(ViolationKind k);

struct Violation {
  ViolationKind kind{};
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(ViolationKind k) const;
};

ValidationReport validate(const FormalProblem& p);

// Every label declared by the constructions, sorted.
std::vector<PointLabel> point_universe(const FormalProblem& p);

// Order-insensitive spelling of a fact head (segment AB == BA, angle ABC ==
// CBA, polygon rotations), used for duplicate and goal-as-premise checks.
std::string head_key(Quantity q, const PointTuple& args);
std::string relation_key(const RelationFact& f);

// Smallest spelling of a vertex cycle under rotation and reflection.
PointTuple canonical_cycle(const PointTuple& cycle);

std::vector<MetricFact> metric_facts(const FormalProblem& p);
std::vector<RelationFact> relation_facts(const FormalProblem& p);

}  // namespace geoforge::cdl
