#include <doctest.h>

#include <chrono>
#include <cmath>
#include <fstream>

#include "geoforge/engine.hpp"

using namespace geoforge;
using namespace geoforge::engine;

namespace {

cdl::FormalProblem must_parse(std::string_view src) {
  auto r = cdl::parse_problem(src, "t");
  for (const auto& d : r.diagnostics) MESSAGE(d.line << ": " << d.code << " " << d.message);
  REQUIRE(r.ok());
  return r.problem;
}

std::string dump(const DeductionResult& r) {
  std::string s;
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    s += std::to_string(i) + " " + r.trace[i].theorem + ": " + describe_fact(r.store, r.trace[i].conclusion) + "\n";
  }
  if (r.inconsistency) s += "inconsistent: " + *r.inconsistency + "\n";
  return s;
}

struct Oracle {
  std::string name, source;
  Number expected;
};

std::vector<Oracle> oracles() {
  std::ifstream in(std::string(GEOFORGE_SOURCE_DIR) + "/tests/data/oracle.json");
  REQUIRE(in);
  auto j = nlohmann::json::parse(in);
  std::vector<Oracle> out;
  for (const auto& o : j) {
    std::string src;
    for (const auto& line : o["cdl"]) src += line.get<std::string>() + "\n";
    out.push_back({o["name"], src, *Number::parse(o["expected"].get<std::string>())});
  }
  return out;
}

// Problems beyond the oracle suite used for the structural properties.
const char* const kExtra[] = {
    "Shape(AB,BC,CA)\nEquilateralTriangle(ABC)\nEqual(LengthOfLine(AB),2)\n",
    "Shape(AB,BD,DA)\nShape(AD,DC,CA)\nCollinear(BDC)\nIsAltitudeOfTriangle(AD,ABC)\nRightTriangle(CAB)\n"
    "Equal(LengthOfLine(AB),6)\nEqual(LengthOfLine(AC),8)\nValue(LengthOfLine(AD))\n",
    "Shape(AB,BD,DA)\nShape(BC,CD,DB)\nParallelogram(ABCD)\nEqual(LengthOfLine(AB),5)\nEqual(LengthOfLine(BC),8)\n"
    "Equal(MeasureOfAngle(DAB),60)\nValue(LengthOfLine(BD))\n",
    "Shape(CA,AD,DC)\nShape(CD,DB,BC)\nCollinear(ADB)\nIsBisectorOfAngle(CD,ACB)\nEqual(MeasureOfAngle(CAB),50)\n"
    "Equal(MeasureOfAngle(ABC),70)\nValue(MeasureOfAngle(ACD))\n",
    "Shape(AB,BC,CA)\nShape(AC,CD,DA)\nRectangle(ABCD)\nEqual(LengthOfLine(AB),8)\nEqual(LengthOfLine(BC),6)\n"
    "Value(LengthOfLine(AC))\n",
};

std::vector<cdl::FormalProblem> property_corpus() {
  std::vector<cdl::FormalProblem> out;
  for (const auto& o : oracles()) out.push_back(must_parse(o.source));
  for (const char* src : kExtra) {
    auto r = cdl::parse_problem(src, "x");
    if (r.ok()) out.push_back(r.problem);
  }
  return out;
}

std::optional<Number> value_of(const DeductionResult& r, cdl::Quantity q, const cdl::PointTuple& args) {
  auto sym = symbol_for(r.figure, q, args);
  if (!sym) return std::nullopt;
  auto id = r.store.find(*sym);
  return id ? r.store.value(*id) : std::nullopt;
}

const TheoremRule& rule(const std::string& id) {
  for (const auto& r : theorem_library()) {
    if (r.id == id) return r;
  }
  FAIL("no rule " << id);
  throw;
}

}  // namespace

TEST_CASE("symbols canonicalize angle and segment spellings") {
  auto p = must_parse("Shape(AB,BC,CA)\n");
  auto r = deduce(p);
  CHECK(symbol_for(r.figure, cdl::Quantity::MeasureOfAngle, {"A", "B", "C"}) ==
        symbol_for(r.figure, cdl::Quantity::MeasureOfAngle, {"C", "B", "A"}));
  CHECK(symbol_for(r.figure, cdl::Quantity::LengthOfLine, {"A", "B"}) ==
        symbol_for(r.figure, cdl::Quantity::LengthOfLine, {"B", "A"}));
  CHECK(symbol_for(r.figure, cdl::Quantity::AreaOf, {"A", "B", "C"}) ==
        symbol_for(r.figure, cdl::Quantity::AreaOf, {"B", "C", "A"}));
}

TEST_CASE("angles along a line share one symbol") {
  auto p = must_parse("Shape(AB,BD,DA)\nShape(AD,DC,CA)\nCollinear(BDC)\n");
  auto r = deduce(p);
  CHECK(symbol_for(r.figure, cdl::Quantity::MeasureOfAngle, {"A", "B", "C"}) ==
        symbol_for(r.figure, cdl::Quantity::MeasureOfAngle, {"A", "B", "D"}));
  CHECK_FALSE(symbol_for(r.figure, cdl::Quantity::MeasureOfAngle, {"B", "D", "C"}));
}

TEST_CASE("deduce: angle sum") {
  auto r = deduce(must_parse("Shape(AB,BC,CA)\nEqual(MeasureOfAngle(CAB),60)\nEqual(MeasureOfAngle(ABC),60)\n"
                             "Value(MeasureOfAngle(BCA))\n"));
  INFO(dump(r));
  REQUIRE(r.solved());
  CHECK(*r.goal_value == Number(60));
  CHECK(r.goal_value->exact());
}

TEST_CASE("deduce: right triangle hypotenuse") {
  auto r = deduce(must_parse("Shape(AB,BC,CA)\nRightTriangle(ABC)\nEqual(LengthOfLine(AB),3)\n"
                             "Equal(LengthOfLine(BC),4)\nValue(LengthOfLine(AC))\n"));
  INFO(dump(r));
  REQUIRE(r.solved());
  // independent check: the hypotenuse squared equals the sum of the leg squares
  Number c = *r.goal_value;
  CHECK(c * c == Number(3) * Number(3) + Number(4) * Number(4));
  CHECK(c.exact());
}

TEST_CASE("deduce: alternate angle across parallels") {
  auto r = deduce(must_parse("Collinear(AEB)\nCollinear(CFD)\nCollinear(GEFH)\nParallelBetweenLine(AB,CD)\n"
                             "Equal(MeasureOfAngle(AEF),70)\nValue(MeasureOfAngle(EFD))\n"));
  INFO(dump(r));
  REQUIRE(r.solved());
  CHECK(*r.goal_value == Number(70));
}

TEST_CASE("deduce: classic-geometry oracle suite") {
  auto start = std::chrono::steady_clock::now();
  for (const auto& o : oracles()) {
    auto r = deduce(must_parse(o.source));
    INFO(o.name << "\n" << dump(r));
    REQUIRE(r.solved());
    CHECK_FALSE(r.inconsistent());
    if (r.goal_value->exact()) {
      CHECK(*r.goal_value == o.expected);
    } else {
      CHECK(std::abs(r.goal_value->value() - o.expected.value()) <= 1e-9 * std::max(1.0, o.expected.value()));
    }
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 1.0);
}

TEST_CASE("deduce: contradictory statement is reported") {
  auto r = deduce(must_parse("Shape(AB,BC,CA)\nEqual(MeasureOfAngle(CAB),100)\nEqual(MeasureOfAngle(ABC),100)\n"));
  CHECK(r.inconsistent());
  auto r2 = deduce(must_parse("Shape(AB,BC,CA)\nIsoscelesTriangle(ABC)\nEqual(MeasureOfAngle(ABC),50)\n"
                              "Equal(MeasureOfAngle(BCA),60)\n"));
  CHECK(r2.inconsistent());
}

TEST_CASE("deduce: unreachable goal stays unsolved") {
  auto r = deduce(must_parse("Shape(AB,BC,CA)\nEqual(LengthOfLine(AB),3)\nValue(LengthOfLine(BC))\n"));
  CHECK_FALSE(r.solved());
  CHECK_FALSE(r.inconsistent());
}

TEST_CASE("propagate: linear elimination") {
  FactStore s;
  int x = s.intern({SymbolKind::Angle, {"A", "B", "C"}});
  int y = s.intern({SymbolKind::Angle, {"C", "B", "D"}});
  s.add(Equation{EquationShape::Linear, {{x, 1}, {y, 1}}, 180}, -1);
  s.add(ValueFact{x, 70}, -1);
  std::vector<DerivationStep> trace;
  std::optional<std::string> bad;
  auto got = propagate(s, trace, bad);
  CHECK_FALSE(bad);
  REQUIRE(got == std::vector<int>{y});
  CHECK(*s.value(y) == Number(110));
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].theorem == "solve_equations");
}

TEST_CASE("propagate: sum of squares takes the positive root") {
  FactStore s;
  int a = s.intern({SymbolKind::Length, {"A", "B"}});
  int b = s.intern({SymbolKind::Length, {"B", "C"}});
  int c = s.intern({SymbolKind::Length, {"A", "C"}});
  s.add(Equation{EquationShape::SumOfSquares, {{a, 1}, {b, 1}, {c, -1}}, 0}, -1);
  s.add(ValueFact{a, 3}, -1);
  s.add(ValueFact{b, 4}, -1);
  std::vector<DerivationStep> trace;
  std::optional<std::string> bad;
  propagate(s, trace, bad);
  REQUIRE(s.value(c));
  CHECK(*s.value(c) * *s.value(c) == Number(25));
  CHECK(s.value(c)->sign() > 0);
}

TEST_CASE("propagate: product with no known factor is a fixpoint") {
  FactStore s;
  int x = s.intern({SymbolKind::Length, {"A", "B"}});
  int y = s.intern({SymbolKind::Length, {"B", "C"}});
  s.add(Equation{EquationShape::ProductRatio, {{x, 1}, {y, 1}}, 12}, -1);
  std::vector<DerivationStep> trace;
  std::optional<std::string> bad;
  CHECK(propagate(s, trace, bad).empty());
  CHECK(trace.empty());
  s.add(ValueFact{x, 3}, -1);
  propagate(s, trace, bad);
  CHECK(*s.value(y) == Number(4));
}

TEST_CASE("propagate: ratio with an isolated factor") {
  FactStore s;
  int x = s.intern({SymbolKind::Length, {"A", "B"}});
  int y = s.intern({SymbolKind::Length, {"D", "E"}});
  s.add(Equation{EquationShape::ProductRatio, {{x, 1}, {y, -1}}, Number::ratio(1, 2)}, -1);
  s.add(ValueFact{y, 10}, -1);
  std::vector<DerivationStep> trace;
  std::optional<std::string> bad;
  propagate(s, trace, bad);
  CHECK(*s.value(x) == Number(5));
}

TEST_CASE("propagate: conflicting rows are inconsistent") {
  FactStore s;
  int x = s.intern({SymbolKind::Angle, {"A", "B", "C"}});
  int y = s.intern({SymbolKind::Angle, {"C", "B", "D"}});
  s.add(Equation{EquationShape::Linear, {{x, 1}, {y, 1}}, 180}, -1);
  s.add(Equation{EquationShape::Linear, {{x, 1}, {y, 1}}, 170}, -1);
  std::vector<DerivationStep> trace;
  std::optional<std::string> bad;
  propagate(s, trace, bad);
  CHECK(bad);
}

TEST_CASE("match_theorem: angle sum binds the triangle") {
  auto r = deduce(must_parse("Shape(AB,BC,CA)\n"), {.max_rounds = 0});
  Context ctx{r.figure, r.store};
  auto apps = match_theorem(rule("triangle_angle_sum"), ctx);
  REQUIRE(apps.size() == 1);
  CHECK(apps[0].binding == cdl::PointTuple{"A", "B", "C"});
  const auto* e = std::get_if<Equation>(&apps[0].conclusion);
  REQUIRE(e);
  CHECK(e->terms.size() == 3);
  CHECK(e->rhs == Number(180));
}

TEST_CASE("match_theorem: angle sum without a polygon") {
  auto r = deduce(must_parse("Collinear(ABC)\n"), {.max_rounds = 0});
  Context ctx{r.figure, r.store};
  CHECK(match_theorem(rule("triangle_angle_sum"), ctx).empty());
}

TEST_CASE("match_theorem: isosceles base angles") {
  auto r = deduce(must_parse("Shape(AB,BC,CA)\nIsoscelesTriangle(ABC)\n"), {.max_rounds = 0});
  Context ctx{r.figure, r.store};
  auto apps = match_theorem(rule("isosceles_base_angles"), ctx);
  REQUIRE(apps.size() == 1);
  const auto* e = std::get_if<Equation>(&apps[0].conclusion);
  REQUIRE(e);
  auto b = r.store.find(*r.figure.angle("A", "B", "C"));
  auto c = r.store.find(*r.figure.angle("A", "C", "B"));
  REQUIRE(b);
  REQUIRE(c);
  Equation want{EquationShape::Linear, {{*b, 1}, {*c, -1}}, 0};
  CHECK(e->key() == want.normalized().key());
}

TEST_CASE("match_theorem: applied conclusions are not offered again") {
  auto r = deduce(must_parse("Shape(AB,BC,CA)\nIsoscelesTriangle(ABC)\n"));
  Context ctx{r.figure, r.store};
  CHECK(match_theorem(rule("isosceles_base_angles"), ctx).empty());
  CHECK(match_theorem(rule("triangle_angle_sum"), ctx).empty());
}

TEST_CASE("extract_metrics: equilateral side 2") {
  auto r = deduce(must_parse(kExtra[0]));
  INFO(dump(r));
  for (auto side : {cdl::PointTuple{"A", "B"}, {"B", "C"}, {"C", "A"}}) {
    auto v = value_of(r, cdl::Quantity::LengthOfLine, side);
    REQUIRE(v);
    CHECK(*v == Number(2));
  }
  for (auto ang : {cdl::PointTuple{"C", "A", "B"}, {"A", "B", "C"}, {"B", "C", "A"}}) {
    auto v = value_of(r, cdl::Quantity::MeasureOfAngle, ang);
    REQUIRE(v);
    CHECK(*v == Number(60));
  }
  auto all = extract_metrics(r);
  CHECK(all.size() >= 6);
}

TEST_CASE("extract_metrics: relations alone force values") {
  auto r = deduce(must_parse("Shape(AB,BC,CD,DA)\nSquare(ABCD)\n"));
  auto all = extract_metrics(r);
  int right = 0;
  for (const auto& m : all) {
    if (m.quantity == cdl::Quantity::MeasureOfAngle && m.value == Number(90)) ++right;
  }
  CHECK(right >= 4);
}

TEST_CASE("extract_metrics: statement metrics are a subset") {
  for (const auto& p : property_corpus()) {
    auto r = deduce(p);
    auto all = extract_metrics(r);
    auto given = statement_metrics(p, r.figure);
    CHECK(all.size() >= given.size());
    for (const auto& m : given) {
      auto it = std::find(all.begin(), all.end(), m);
      REQUIRE(it != all.end());
      CHECK(it->value == m.value);
    }
    CHECK(std::is_sorted(all.begin(), all.end(), [](auto& a, auto& b) { return a.symbol < b.symbol; }));
    for (const auto& m : all) CHECK(m.value.finite());
  }
}

TEST_CASE("property: trace replays bit-identically") {
  for (const auto& p : property_corpus()) {
    auto r = deduce(p);
    std::string why;
    INFO(cdl::print_problem(p) << dump(r));
    CHECK_MESSAGE(replay(r, &why), why);
    if (r.goal_symbol && r.solved()) {
      auto slice = slice_trace(r, *r.goal_symbol);
      if (!slice.empty()) {
        CHECK(replay(r, slice, &why));
        CHECK(r.trace[static_cast<std::size_t>(slice.back())].conclusion ==
              *r.store.value_fact(*r.goal_symbol));
      }
    }
  }
}

TEST_CASE("property: premises precede their conclusions") {
  for (const auto& p : property_corpus()) {
    auto r = deduce(p);
    for (const auto& step : r.trace) {
      for (int premise : step.premises) CHECK(premise < step.conclusion);
    }
  }
}

TEST_CASE("property: determined values satisfy every determined equation") {
  for (const auto& p : property_corpus()) {
    auto r = deduce(p);
    if (r.inconsistent()) continue;
    CHECK(max_equation_gap(r.store) <= 1e-9);
  }
}

TEST_CASE("property: monotone in the round budget") {
  for (const auto& p : property_corpus()) {
    auto prev = deduce(p, {.max_rounds = 0});
    for (int k = 1; k <= 8; ++k) {
      auto cur = deduce(p, {.max_rounds = k});
      auto before = extract_metrics(prev), after = extract_metrics(cur);
      for (const auto& m : before) {
        auto it = std::find(after.begin(), after.end(), m);
        REQUIRE(it != after.end());
        CHECK(it->value == m.value);
      }
      prev = std::move(cur);
    }
  }
}

TEST_CASE("property: deduction terminates within budget") {
  for (const auto& p : property_corpus()) {
    auto start = std::chrono::steady_clock::now();
    auto r = deduce(p, {.max_rounds = 3, .timeout_seconds = 5});
    CHECK(r.rounds <= 3);
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 5.5);
  }
}

TEST_CASE("trace exports as an ordered step list") {
  auto r = deduce(must_parse(kExtra[1]));
  REQUIRE(r.solved());
  auto steps = slice_trace(r, *r.goal_symbol);
  auto j = trace_to_json(r, steps);
  REQUIRE(j.size() == steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(j[i]["step"] == steps[i]);
    CHECK(j[i]["theorem"].is_string());
  }
}

TEST_CASE("theorem library covers the pinned minimum") {
  auto ids = theorem_ids();
  CHECK(ids.size() >= 20);
  for (const char* want : {"triangle_angle_sum", "exterior_angle", "vertical_angles", "linear_pair",
                           "parallel_alternate_angles", "parallel_corresponding_angles", "parallel_cointerior_angles",
                           "isosceles_base_angles", "equilateral_triangle", "pythagorean", "midpoint_definition",
                           "angle_bisector", "parallelogram_properties", "rectangle_definition", "square_definition",
                           "similar_triangle_sides", "similar_triangle_angles", "congruent_triangle", "inscribed_angle",
                           "thales", "tangent_radius", "heron_area", "altitude_area", "rectangle_area"}) {
    CHECK_MESSAGE(std::find(ids.begin(), ids.end(), want) != ids.end(), want);
  }
}

TEST_CASE("deduce: multi-step problems match closed forms") {
  // altitude to the hypotenuse: legs 6, 8 give hypotenuse 10 and height 6*8/10
  // parallelogram diagonal: 5^2 + 8^2 - 2*5*8*cos 60
  // bisector: half of 180 - 50 - 70
  // rectangle diagonal: sqrt(8^2 + 6^2)
  const double expected[] = {std::nan(""), 6.0 * 8.0 / std::hypot(6.0, 8.0),
                             std::sqrt(25.0 + 64.0 - 2 * 5 * 8 * std::cos(M_PI / 3)), (180.0 - 50 - 70) / 2,
                             std::hypot(8.0, 6.0)};
  for (std::size_t i = 1; i < std::size(kExtra); ++i) {
    auto r = deduce(must_parse(kExtra[i]));
    INFO(std::string(kExtra[i]) << dump(r));
    REQUIRE(r.solved());
    CHECK(r.goal_value->value() == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}
