#pragma once

// Forward-chaining deduction over a fixed theorem library, with an algebraic
// layer that solves the accumulated equations after every round.

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "geoforge/cdl.hpp"
#include "geoforge/number.hpp"

namespace geoforge::engine {

using cdl::PointLabel;
using cdl::PointTuple;

// ---- quantity symbols ------------------------------------------------------

// ArcMeasure(O,A,B) is the central measure of the arc running counter-clockwise
// from A to B; it is internal and never surfaces as a metric condition.
enum class SymbolKind { Length, Angle, ArcMeasure, ArcLength, Radius, Diameter, Perimeter, Area };

struct Symbol {
  SymbolKind kind{};
  PointTuple args;
  friend bool operator==(const Symbol&, const Symbol&) = default;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

std::string symbol_text(const Symbol& s);
std::optional<cdl::Quantity> quantity_of(SymbolKind k);

// ---- figure ------------------------------------------------------------------

struct Line {
  PointTuple points;         // in line order
  std::vector<int> sources;  // fact ids that put these points on one line
};

// A ray from a vertex. Rays lying along a known line are identified by
// (line, direction); rep is the smallest label on that side of the vertex.
struct Ray {
  PointLabel vertex;
  int line = -1;  // -1: no line through vertex and the target point
  int dir = 0;    // +1 toward higher line index, -1 toward lower
  PointLabel rep;
  friend bool operator==(const Ray&, const Ray&) = default;
};

struct Circle {
  PointLabel centre;
  PointTuple points;  // counter-clockwise
  int source = -1;
};

struct Face {
  PointTuple vertices;
  int source = -1;
};

class Figure {
 public:
  // constructions: (fact, fact id); relations: statement relations that imply
  // collinearity (midpoint, median foot, diameter through the centre).
  static Figure build(const std::vector<std::pair<cdl::ConstructionFact, int>>& constructions,
                      const std::vector<std::pair<cdl::RelationFact, int>>& relations);

  const PointTuple& points() const { return points_; }
  const std::vector<Line>& lines() const { return lines_; }
  const std::vector<Circle>& circles() const { return circles_; }
  const std::vector<Face>& faces() const { return faces_; }
  // Non-collinear triples joined pairwise by lines; labels sorted.
  const std::vector<std::array<PointLabel, 3>>& triangles() const { return triangles_; }

  std::optional<int> line_through(const PointLabel& a, const PointLabel& b) const;
  bool connected(const PointLabel& a, const PointLabel& b) const { return line_through(a, b).has_value(); }
  int index_on(int line, const PointLabel& p) const;  // -1 if absent
  // b strictly between a and c on one line.
  bool between(const PointLabel& a, const PointLabel& b, const PointLabel& c) const;
  bool collinear(const PointLabel& a, const PointLabel& b, const PointLabel& c) const;

  Ray ray(const PointLabel& vertex, const PointLabel& toward) const;
  std::vector<Ray> rays_at(const PointLabel& vertex) const;
  bool opposite(const Ray& a, const Ray& b) const;
  // Points lying on the ray (excluding the vertex).
  PointTuple ray_points(const Ray& r) const;

  // Canonical angle (rep, vertex, rep) or nullopt for zero/straight angles.
  std::optional<Symbol> angle(const PointLabel& a, const PointLabel& vertex, const PointLabel& c) const;
  std::optional<Symbol> angle(const Ray& a, const Ray& b) const;
  static Symbol length(const PointLabel& a, const PointLabel& b);
  static Symbol polygon(SymbolKind kind, const PointTuple& cycle);

  // Line fact ids for a set of segments (used as premises of figure rules).
  std::vector<int> sources_of(const std::vector<std::pair<PointLabel, PointLabel>>& segments) const;
  const Circle* circle(const PointLabel& centre) const;

 private:
  PointTuple points_;
  std::vector<Line> lines_;
  std::vector<Circle> circles_;
  std::vector<Face> faces_;
  std::vector<std::array<PointLabel, 3>> triangles_;
};

// ---- equations and the fact store -----------------------------------------

enum class EquationShape { Linear, ProductRatio, SumOfSquares };

struct Term {
  int symbol = -1;
  Number coef;
  friend bool operator==(const Term&, const Term&) = default;
};

// Linear:        sum coef * x       = rhs
// SumOfSquares:  sum coef * x^2     = rhs
// ProductRatio:  prod x ^ coef      = rhs   (coef an integer)
struct Equation {
  EquationShape shape{};
  std::vector<Term> terms;
  Number rhs;

  // Merges repeated symbols, drops zero terms, sorts by symbol and scales
  // linear rows so the leading coefficient is 1.
  Equation normalized() const;
  std::string key() const;
};

std::string_view name_of(EquationShape s);

struct ValueFact {
  int symbol = -1;
  Number value;
};

using FactBody = std::variant<cdl::ConstructionFact, cdl::RelationFact, Equation, ValueFact>;

struct Fact {
  FactBody body;
  int step = -1;  // deriving step, or -1 for a statement fact
};

struct DerivationStep {
  std::string theorem;
  PointTuple binding;
  std::vector<int> premises;  // fact ids
  int conclusion = -1;        // fact id
};

class FactStore {
 public:
  int intern(const Symbol& s);
  std::optional<int> find(const Symbol& s) const;
  const Symbol& symbol(int id) const { return symbols_[static_cast<std::size_t>(id)]; }
  std::size_t symbol_count() const { return symbols_.size(); }

  const std::vector<Fact>& facts() const { return facts_; }
  const Fact& fact(int id) const { return facts_[static_cast<std::size_t>(id)]; }

  // Adds a fact; relations and equations are deduplicated, returning the
  // existing id and false when already present.
  std::pair<int, bool> add(FactBody body, int step);

  std::optional<int> value_fact(int symbol) const;
  std::optional<Number> value(int symbol) const;
  bool determined(int symbol) const { return value_fact(symbol).has_value(); }
  std::optional<int> relation_id(const cdl::RelationFact& r) const;
  std::optional<int> equation_id(const Equation& e) const;  // e need not be normalized
  const std::vector<int>& relation_ids() const { return relations_; }
  const std::vector<int>& equation_ids() const { return equations_; }
  const std::vector<int>& value_ids() const { return values_; }
  int generation() const { return generation_; }

 private:
  std::vector<Symbol> symbols_;
  std::map<Symbol, int> symbol_ids_;
  std::vector<Fact> facts_;
  std::vector<int> relations_, equations_, values_;
  std::unordered_map<std::string, int> relation_keys_, equation_keys_;
  std::unordered_map<int, int> determined_;
  int generation_ = 0;
};

// Solves `target` from the given equations after substituting the known
// values. Deterministic in its inputs, so replaying a step reproduces the
// value bit for bit. Returns nullopt if the subsystem does not pin target.
std::optional<Number> solve_subsystem(const std::vector<Equation>& equations, const std::map<int, Number>& known,
                                      int target);

// ---- theorem library -------------------------------------------------------

struct Application {
  std::string theorem;
  PointTuple binding;
  std::vector<int> premises;
  std::variant<cdl::RelationFact, Equation, ValueFact> conclusion;
};

struct Context {
  const Figure& figure;
  FactStore& store;  // rules may intern symbols but never add facts
};

struct TheoremRule {
  std::string id;
  std::function<void(Context&, std::vector<Application>&)> match;
};

const std::vector<TheoremRule>& theorem_library();
std::vector<std::string> theorem_ids();

// Recomputes the value of a step produced by a computing rule (law of
// cosines, Heron, ...) from premise values, in premise order.
std::optional<Number> recompute(const std::string& theorem, const Symbol& target,
                                const std::vector<std::pair<Symbol, Number>>& premise_values);

// ---- deduction ---------------------------------------------------------------

struct DeductionBudget {
  int max_rounds = 8;
  double timeout_seconds = 10.0;
  bool stop_at_goal = false;
};

struct DeductionResult {
  FactStore store;
  Figure figure;
  std::vector<DerivationStep> trace;
  std::optional<int> goal_symbol;
  std::optional<Number> goal_value;  // Solved(value) when set
  std::optional<std::string> inconsistency;
  bool timed_out = false;
  int rounds = 0;

  bool solved() const { return goal_value.has_value(); }
  bool inconsistent() const { return inconsistency.has_value(); }
  // Step that determined a symbol, or -1 if given or undetermined.
  int step_of(int symbol) const;
};

DeductionResult deduce(const cdl::FormalProblem& p, const DeductionBudget& budget = {});

// The figure deduce would build for p, without running any rules.
Figure figure_of(const cdl::FormalProblem& p);

// Matches one rule against the store; bindings already applied are skipped.
std::vector<Application> match_theorem(const TheoremRule& rule, Context& ctx);

// Runs the algebraic layer to a fixpoint, appending steps; returns the
// symbols determined by this call.
std::vector<int> propagate(FactStore& store, std::vector<DerivationStep>& trace,
                           std::optional<std::string>& inconsistency);

// Symbol for a metric head, canonicalized against the figure.
std::optional<Symbol> symbol_for(const Figure& f, cdl::Quantity q, const PointTuple& args);
// Metric head for a catalog symbol (nullopt for internal kinds).
std::optional<std::pair<cdl::Quantity, PointTuple>> head_of(const Symbol& s);

// Backward closure of the step that determined `symbol`; the result is in
// trace order and ends with that step.
std::vector<int> slice_trace(const DeductionResult& r, int symbol);

// Re-executes the steps from the statement facts; true when every value
// comes out bit-identical to the store.
bool replay(const DeductionResult& r, const std::vector<int>& steps, std::string* why = nullptr);
bool replay(const DeductionResult& r, std::string* why = nullptr);

// Largest |lhs - rhs| / max(1, |rhs|) over fully determined equations.
double max_equation_gap(const FactStore& store);

// ---- metrics -----------------------------------------------------------------

struct Metric {
  Symbol symbol;
  cdl::Quantity quantity{};
  PointTuple args;
  Number value;
  friend bool operator==(const Metric& a, const Metric& b) { return a.symbol == b.symbol; }
};

using MetricSet = std::vector<Metric>;  // sorted by symbol

MetricSet extract_metrics(const DeductionResult& r);
// Metric conditions of the problem statement, canonicalized.
MetricSet statement_metrics(const cdl::FormalProblem& p, const Figure& f);

nlohmann::json trace_to_json(const DeductionResult& r, const std::vector<int>& steps);
std::string describe_fact(const FactStore& store, int fact_id);

}  // namespace geoforge::engine
