#pragma once

// Diagram layout: construction and statement facts become residuals over 2-D
// point coordinates, minimized by damped least squares from random starts.

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoforge/cdl.hpp"
#include "geoforge/rng.hpp"

namespace geoforge::layout {

enum class ResidualKind {
  Collinear,
  OnCircle,
  Perpendicular,
  Parallel,
  EqualLength,
  FixedLength,
  FixedAngle,
  EqualAngle,
  Midpoint,
  Tangent,
  NonDegeneracy,
};

enum class Strictness { Incidence, Metric };

std::string_view name_of(ResidualKind k);
std::string_view name_of(Strictness s);
Strictness strictness_of(ResidualKind k);

// What a FixedLength residual measures. Every measure scales with the
// drawing scale s (area with s^2), so value v means "v units at scale s".
enum class Measure { Segment, Radius, Diameter, Perimeter, Area, ArcLength };

// Point-slot layouts per kind (indices into ConstraintSystem::points):
//   Collinear      {a, b, p}        p on line ab
//                  {a, b, c}        with order=true: b lies between a and c
//   OnCircle       {o, p}           |op| = radius of circle `circle`
//                  {p, q, r}        with order=true: p, q, r counter-clockwise
//   Perpendicular  {a, b, c, d}     ab perpendicular to cd
//   Parallel       {a, b, c, d}     ab and cd point the same way
//   EqualLength    {a, b, c, d}     |ab| = |cd|
//   FixedLength    see Measure: Segment {a,b}; Radius/Diameter {o}; Perimeter
//                  and Area the polygon; ArcLength {o, a, b}
//   FixedAngle     {a, v, c}        angle avc = target degrees
//   EqualAngle     {a, v, c, d, w, e}
//   Midpoint       {m, a, b}
//   Tangent        {p, a, o}        pa perpendicular to oa
//   NonDegeneracy  {a, b}           separation floor
//                  {a, b, c}        triangle area floor
//                  {p}              inside the canvas margin
struct Residual {
  ResidualKind kind{};
  std::vector<int> points;
  double target = 0.0;
  Measure measure = Measure::Segment;
  int circle = -1;  // radius variable for OnCircle / Radius / Diameter / ArcLength
  bool order = false;
  std::string source;  // the fact it came from

  Strictness strictness() const { return strictness_of(kind); }
};

struct Canvas {
  double width = 400.0;
  double height = 300.0;
  double diagonal() const;
  double area() const { return width * height; }
};

struct ConstraintSystem {
  cdl::PointTuple points;
  std::vector<cdl::PointLabel> circles;  // centre per radius variable
  std::vector<Residual> residuals;
  Canvas canvas;
  std::vector<int> order;  // placement order, see order_points

  int index_of(const cdl::PointLabel& p) const;  // -1 if absent
  bool uses_scale() const;
};

struct LayoutError : std::runtime_error {
  std::string kind;  // UnmappablePredicate | ThresholdFail | NumericalFailure
  LayoutError(std::string k, const std::string& what) : std::runtime_error(what), kind(std::move(k)) {}
};

// Facts: relation and metric statement facts; metric facts of every channel
// shape the drawing. Throws LayoutError(UnmappablePredicate).
ConstraintSystem compile_constraints(const std::vector<cdl::ConstructionFact>& constructions,
                                     const std::vector<cdl::StatementFact>& facts, Canvas canvas = {});
ConstraintSystem compile_constraints(const cdl::FormalProblem& p, Canvas canvas = {});

// Descending residual degree (non-degeneracy floors excluded), ties broken
// alphabetically.
std::vector<int> order_points(const ConstraintSystem& system);

struct LayoutConfig {
  int restarts = 20;
  int max_iterations = 500;
  double tau_incidence = 1e-3;
  double tau_metric = 1e-2;
  double weight_incidence = 100.0;
  double weight_metric = 1.0;
  double separation = 0.03;  // fraction of the canvas diagonal
  double min_area = 0.005;   // fraction of the canvas area
  double margin = 0.05;      // fraction of each canvas side kept free
};

struct Point2 {
  double x = 0.0, y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct LayoutSolution {
  std::vector<Point2> coords;   // aligned with ConstraintSystem::points
  std::vector<double> radii;    // aligned with ConstraintSystem::circles
  double scale = 1.0;           // canvas units per problem unit
  std::vector<double> residuals;  // per residual, unweighted norm
  double loss = 0.0;              // sum of weighted squares
  int restarts_used = 0;
};

struct ThresholdReport {
  bool accepted = true;
  double max_incidence = 0.0;
  double max_metric = 0.0;
  std::vector<int> failing;  // residual indices
};

// Variable vector: x,y per point, then radii, then log(scale).
std::vector<double> pack(const ConstraintSystem& s, const LayoutSolution& sol);
LayoutSolution unpack(const ConstraintSystem& s, const std::vector<double>& vars);

// Unweighted residual components of one residual at vars.
std::vector<double> evaluate(const ConstraintSystem& s, const Residual& r, const std::vector<double>& vars,
                             const LayoutConfig& config = {});
// Their derivatives with respect to every variable (rows = components).
std::vector<std::vector<double>> jacobian(const ConstraintSystem& s, const Residual& r,
                                          const std::vector<double>& vars, const LayoutConfig& config = {});

// Fills residuals and loss of a solution from its coordinates.
void score(const ConstraintSystem& s, LayoutSolution& sol, const LayoutConfig& config = {});

ThresholdReport check_thresholds(const ConstraintSystem& s, const LayoutSolution& sol,
                                 const LayoutConfig& config = {});

// Throws LayoutError(ThresholdFail | NumericalFailure).
LayoutSolution optimize(const ConstraintSystem& s, Rng& rng, const LayoutConfig& config = {});

nlohmann::json to_json(const ConstraintSystem& s, const LayoutSolution& sol, const LayoutConfig& config = {});

}  // namespace geoforge::layout
