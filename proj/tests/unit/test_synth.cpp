#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "geoforge/synth.hpp"

using namespace geoforge;
using namespace geoforge::synth;

namespace {

cdl::FormalProblem must_parse(std::string_view src) {
  auto r = cdl::parse_problem(src, "t");
  for (const auto& d : r.diagnostics) MESSAGE(d.line << ": " << d.code << " " << d.message);
  REQUIRE(r.ok());
  return r.problem;
}

using fixtures::seeds;

const char* const kTriangle =
    "Shape(AB,BD,DA)\nShape(AD,DC,CA)\nCollinear(BDC)\nRightTriangle(BAC)\nIsAltitudeOfTriangle(AD,ABC)\n"
    "Equal(LengthOfLine(AB),6)\nimage: Equal(LengthOfLine(AC),8)\nValue(LengthOfLine(AD))\n";

std::set<engine::Symbol> stated_symbols(const cdl::FormalProblem& p) {
  auto f = engine::figure_of(p);
  std::set<engine::Symbol> out;
  for (const auto& m : cdl::metric_facts(p)) out.insert(*engine::symbol_for(f, m.quantity, m.args));
  return out;
}

}  // namespace

TEST_CASE("every seed deduces consistently and has spare metrics") {
  auto all = seeds();
  REQUIRE(all.size() == 10);
  for (const auto& p : all) {
    CAPTURE(p.id);
    CHECK(cdl::validate(p).ok());
    auto s = formalize(p);
    CHECK_FALSE(s.deduction.inconsistent());
    CHECK(s.deduction.solved());
    CHECK(s.m_all.size() > s.m_p.size());
  }
}

TEST_CASE("mutate_conditions: n within bounds and count preserved") {
  auto seed = formalize(must_parse(kTriangle));
  const auto spare = seed.m_all.size() - seed.m_p.size();
  std::set<int> seen_n;
  for (std::uint64_t k = 0; k < 200; ++k) {
    Rng rng(k);
    auto [p, swap] = mutate_conditions(seed, rng);
    CHECK(swap.n >= 1);
    CHECK(static_cast<std::size_t>(swap.n) <= std::min(seed.m_p.size(), spare));
    CHECK(swap.removed.size() == static_cast<std::size_t>(swap.n));
    CHECK(swap.added.size() == static_cast<std::size_t>(swap.n));
    CHECK(cdl::metric_facts(p).size() == seed.m_p.size());
    CHECK(cdl::relation_facts(p) == cdl::relation_facts(seed.problem));
    CHECK(p.constructions == seed.problem.constructions);
    for (const auto& m : swap.removed) CHECK(std::find(seed.m_p.begin(), seed.m_p.end(), m) != seed.m_p.end());
    for (const auto& m : swap.added) CHECK(std::find(seed.m_p.begin(), seed.m_p.end(), m) == seed.m_p.end());
    seen_n.insert(swap.n);
  }
  CHECK(seen_n == std::set<int>{1, 2});
}

TEST_CASE("mutate_conditions: n range follows the bound") {
  // three statement metrics and seven spare ones: n in {1,2,3}
  FormalizedSeed s;
  s.problem = must_parse("Shape(AB,BC,CA)\n");
  auto f = engine::figure_of(s.problem);
  const cdl::PointTuple heads[] = {{"A", "B"}, {"B", "C"}, {"A", "C"}};
  for (const auto& h : heads) {
    auto sym = *engine::symbol_for(f, cdl::Quantity::LengthOfLine, h);
    s.m_p.push_back({sym, cdl::Quantity::LengthOfLine, sym.args, 1});
  }
  s.m_all = s.m_p;
  for (int i = 0; i < 7; ++i) {
    engine::Symbol sym{engine::SymbolKind::Perimeter, {"A", "B", "C", std::string(1, static_cast<char>('D' + i))}};
    s.m_all.push_back({sym, cdl::Quantity::PerimeterOf, sym.args, 10});
  }
  std::set<int> seen;
  for (std::uint64_t k = 0; k < 300; ++k) {
    Rng rng(k);
    seen.insert(mutate_conditions(s, rng).second.n);
  }
  CHECK(seen == std::set<int>{1, 2, 3});

  // five statement metrics, one spare: n forced to 1
  s.m_all.resize(s.m_p.size() + 1);
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(k);
    CHECK(mutate_conditions(s, rng).second.n == 1);
  }

  s.m_all = s.m_p;
  Rng rng(1);
  try {
    mutate_conditions(s, rng);
    FAIL("expected SeedExhausted");
  } catch (const SynthError& e) {
    CHECK(e.reason == Rejection::SeedExhausted);
  }
}

TEST_CASE("select_goal: uniform over unstated metrics") {
  auto seed = formalize(must_parse(kTriangle));
  Rng m(3);
  auto [p, swap] = mutate_conditions(seed, m);
  auto stated = stated_symbols(p);
  std::map<std::string, int> counts;
  std::size_t open = 0;
  for (const auto& x : seed.m_all) open += stated.count(x.symbol) ? 0 : 1;
  auto f = engine::figure_of(p);
  for (std::uint64_t k = 0; k < 4000; ++k) {
    Rng rng(k);
    auto g = select_goal(p, seed.m_all, rng);
    auto sym = *engine::symbol_for(f, g.quantity, g.args);
    CHECK_FALSE(stated.count(sym));
    CHECK(std::find_if(seed.m_all.begin(), seed.m_all.end(), [&](auto& x) { return x.symbol == sym; }) !=
          seed.m_all.end());
    counts[cdl::print_statement(g)]++;
  }
  CHECK(counts.size() == open);
  // each bucket within 5 sigma of the uniform expectation
  double expect = 4000.0 / static_cast<double>(open);
  for (const auto& [k, c] : counts) CHECK(std::abs(c - expect) < 5 * std::sqrt(expect));
}

TEST_CASE("select_goal: exhausted and single spare") {
  auto p = must_parse("Shape(AB,BC,CA)\nEqual(LengthOfLine(AB),3)\nEqual(LengthOfLine(BC),4)\n");
  auto f = engine::figure_of(p);
  engine::MetricSet all;
  for (auto h : {cdl::PointTuple{"A", "B"}, {"B", "C"}}) {
    auto s = *engine::symbol_for(f, cdl::Quantity::LengthOfLine, h);
    all.push_back({s, cdl::Quantity::LengthOfLine, s.args, 3});
  }
  Rng rng(0);
  CHECK_THROWS_AS(select_goal(p, all, rng), SynthError);
  auto s = *engine::symbol_for(f, cdl::Quantity::LengthOfLine, {"C", "A"});
  all.push_back({s, cdl::Quantity::LengthOfLine, s.args, 5});
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng r(k);
    auto g = select_goal(p, all, r);
    CHECK(engine::symbol_for(f, g.quantity, g.args) == s);
  }
}

TEST_CASE("ensure_solvable: reachable goal keeps its provenance") {
  auto c = ensure_solvable(must_parse(kTriangle));
  CHECK(c.provenance == GoalProvenance::Original);
  CHECK(c.goal_value.value() == doctest::Approx(4.8).epsilon(1e-12));
  REQUIRE_FALSE(c.steps.empty());
  const auto& last = c.result.trace[static_cast<std::size_t>(c.steps.back())];
  CHECK(last.conclusion == *c.result.store.value_fact(*c.result.goal_symbol));
}

TEST_CASE("ensure_solvable: unreachable goal falls back to the last inference") {
  auto p = must_parse(
      "Shape(AB,BC,CA)\nShape(DE,EF,FD)\nEqual(MeasureOfAngle(CAB),50)\nEqual(MeasureOfAngle(ABC),60)\n"
      "Value(LengthOfLine(DE))\n");
  auto c = ensure_solvable(p);
  CHECK(c.provenance == GoalProvenance::FallbackLastInference);
  REQUIRE(c.problem.goal);
  CHECK(c.problem.goal->quantity == cdl::Quantity::MeasureOfAngle);
  CHECK(c.goal_value == Number(70));
  // the last determination of the original run is the new goal
  auto first = engine::deduce(p);
  int last_value_step = -1;
  for (std::size_t i = 0; i < first.trace.size(); ++i) {
    if (std::holds_alternative<engine::ValueFact>(first.store.fact(first.trace[i].conclusion).body)) {
      last_value_step = static_cast<int>(i);
    }
  }
  REQUIRE(last_value_step >= 0);
  const auto& v = std::get<engine::ValueFact>(
      first.store.fact(first.trace[static_cast<std::size_t>(last_value_step)].conclusion).body);
  CHECK(engine::head_of(first.store.symbol(v.symbol))->second == c.problem.goal->args);
}

TEST_CASE("ensure_solvable: nothing derivable is rejected") {
  auto p = must_parse("Shape(AB,BC,CA)\nEqual(LengthOfLine(AB),3)\nValue(LengthOfLine(BC))\n");
  try {
    ensure_solvable(p);
    FAIL("expected rejection");
  } catch (const SynthError& e) {
    CHECK(e.reason == Rejection::NoInference);
  }
}

TEST_CASE("ensure_solvable: contradictory conditions are rejected") {
  auto p = must_parse(
      "Shape(AB,BC,CA)\nRightTriangle(ABC)\nEqual(LengthOfLine(AB),3)\nEqual(LengthOfLine(BC),4)\n"
      "Equal(LengthOfLine(AC),3)\nValue(MeasureOfAngle(BCA))\n");
  try {
    ensure_solvable(p);
    FAIL("expected rejection");
  } catch (const SynthError& e) {
    CHECK(e.reason == Rejection::Inconsistent);
  }
}

TEST_CASE("allocate_channels: partition with a forced image fact") {
  auto p = must_parse(
      "Shape(AB,BC,CA)\nIsoscelesTriangle(ABC)\nEqual(LengthOfLine(AB),3)\nEqual(LengthOfLine(BC),4)\n"
      "Equal(MeasureOfAngle(ABC),50)\nEqual(PerimeterOf(ABC),10)\n");
  auto facts = p.text_facts;
  for (std::uint64_t k = 0; k < 100; ++k) {
    Rng a(k), b(k);
    auto x = allocate_channels(facts, a, 0.5);
    auto y = allocate_channels(facts, b, 0.5);
    CHECK(x.text == y.text);
    CHECK(x.image == y.image);
    CHECK(x.text.size() + x.image.size() == facts.size());
    CHECK_FALSE(x.image.empty());
    for (const auto& f : x.image) CHECK(std::holds_alternative<cdl::MetricFact>(f));
    for (const auto& f : facts) {
      bool in_text = std::find(x.text.begin(), x.text.end(), f) != x.text.end();
      bool in_image = std::find(x.image.begin(), x.image.end(), f) != x.image.end();
      CHECK(in_text != in_image);
    }
  }
  std::vector<cdl::StatementFact> one{cdl::MetricFact{cdl::Quantity::LengthOfLine, {"A", "B"}, 3}};
  Rng r(0);
  auto c = allocate_channels(one, r, 0.0);
  CHECK(c.image.size() == 1);
  CHECK(c.text.empty());
  std::vector<cdl::StatementFact> rel{p.text_facts.front()};
  auto d = allocate_channels(rel, r, 1.0);
  CHECK(d.text.size() == 1);
  CHECK(d.image.empty());
}

TEST_CASE("synthesize_batch: rich seed gives distinct candidates") {
  auto seed = formalize(must_parse(kTriangle));
  REQUIRE(seed.m_all.size() - seed.m_p.size() >= 12);
  auto batch = synthesize_batch(seed, 5, 42);
  CHECK(batch.candidates.size() == 5);
  std::set<std::string> keys;
  for (const auto& c : batch.candidates) keys.insert(problem_key(c.problem));
  CHECK(keys.size() == 5);
  CHECK_FALSE(keys.count(problem_key(seed.problem)));
}

TEST_CASE("synthesize_batch: exhausted seed") {
  auto seed = formalize(must_parse("Shape(AB,BC,CA)\nEqual(LengthOfLine(AB),3)\nValue(LengthOfLine(BC))\n"));
  auto batch = synthesize_batch(seed, 5, 1);
  CHECK(batch.candidates.empty());
  CHECK(batch.diagnostics["SeedExhausted"] == 1);
}

TEST_CASE("synthesize_batch: deterministic under a fixed seed") {
  auto seed = formalize(seeds()[0]);
  auto a = synthesize_batch(seed, 6, 7), b = synthesize_batch(seed, 6, 7);
  REQUIRE(a.candidates.size() == b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    CHECK(cdl::print_problem(a.candidates[i].problem) == cdl::print_problem(b.candidates[i].problem));
    CHECK(a.candidates[i].goal_value.to_string() == b.candidates[i].goal_value.to_string());
  }
  CHECK(a.diagnostics == b.diagnostics);
}

TEST_CASE("synthesize_batch: late rejections are retried") {
  auto seed = formalize(must_parse(kTriangle));
  int calls = 0;
  auto batch = synthesize_batch(seed, 3, 5, {}, [&](SynthesisCandidate&) { return ++calls % 2 ? "Late" : ""; });
  CHECK(batch.candidates.size() == 3);
  CHECK(batch.diagnostics["Late"] == 3);
}

TEST_CASE("property: candidate invariants over every seed") {
  for (const auto& p : seeds()) {
    CAPTURE(p.id);
    auto seed = formalize(p);
    auto batch = synthesize_batch(seed, 8, 42);
    CHECK_FALSE(batch.candidates.empty());
    for (const auto& c : batch.candidates) {
      CAPTURE(cdl::print_problem(c.problem));
      // condition count preserved
      CHECK(cdl::metric_facts(c.problem).size() == seed.m_p.size());
      // goal freshness
      auto f = engine::figure_of(c.problem);
      auto goal = engine::symbol_for(f, c.problem.goal->quantity, c.problem.goal->args);
      REQUIRE(goal);
      CHECK_FALSE(stated_symbols(c.problem).count(*goal));
      // relations in text only, and the image holds at least one metric
      for (const auto& x : c.problem.image_facts) CHECK(std::holds_alternative<cdl::MetricFact>(x));
      CHECK_FALSE(c.problem.image_facts.empty());
      // the final step determines the goal; a fresh run reproduces its value
      const auto& last = c.result.trace[static_cast<std::size_t>(c.steps.back())];
      CHECK(last.conclusion == *c.result.store.value_fact(*c.result.goal_symbol));
      auto again = engine::deduce(c.problem);
      REQUIRE(again.solved());
      CHECK(approx_equal(*again.goal_value, c.goal_value, 1e-9));
      CHECK(engine::replay(c.result, c.steps));
      CHECK(cdl::validate(c.problem).ok());
    }
  }
}
