// Prints one PASS/FAIL line per acceptance criterion; exits non-zero when any
// criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "geoforge/engine.hpp"
#include "geoforge/layout.hpp"
#include "geoforge/pipeline.hpp"
#include "geoforge/render.hpp"
#include "geoforge/synth.hpp"
#include "geoforge/verbalize.hpp"

using namespace geoforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::set<engine::Symbol> stated_symbols(const cdl::FormalProblem& p) {
  auto f = engine::figure_of(p);
  std::set<engine::Symbol> out;
  for (const auto& m : cdl::metric_facts(p)) out.insert(*engine::symbol_for(f, m.quantity, m.args));
  return out;
}

// ---- 1 ----------------------------------------------------------------------

Outcome oracle_suite() {
  auto oracles = fixtures::oracles();
  int solved = 0;
  std::string missed;
  auto start = std::chrono::steady_clock::now();
  for (const auto& o : oracles) {
    auto r = engine::deduce(o.problem);
    bool ok = r.solved() && !r.inconsistent() &&
              (r.goal_value->exact() ? *r.goal_value == o.expected
                                     : std::abs(r.goal_value->value() - o.expected.value()) <=
                                           1e-9 * std::max(1.0, std::abs(o.expected.value())));
    if (ok) {
      ++solved;
    } else {
      missed += " " + o.name;
    }
  }
  double t = seconds_since(start);
  bool pass = oracles.size() == 10 && solved == 10 && t < 1.0;
  return {pass, fmt("%d/%zu solved exactly in %.3f s%s", solved, oracles.size(), t, missed.c_str())};
}

// ---- 2 ----------------------------------------------------------------------

struct Sample {
  const synth::FormalizedSeed* seed;
  synth::SynthesisCandidate candidate;
};

Outcome candidate_invariants(const std::vector<synth::FormalizedSeed>& seeds, std::vector<Sample>& samples) {
  constexpr int kWanted = 1000;
  for (const auto& seed : seeds) {
    auto batch = synth::synthesize_batch(seed, 110, 42);
    for (auto& c : batch.candidates) samples.push_back({&seed, std::move(c)});
  }
  if (static_cast<int>(samples.size()) < kWanted) {
    return {false, fmt("only %zu candidates synthesized", samples.size())};
  }
  samples.resize(kWanted);

  int count_ok = 0, fresh = 0, partition = 0, replayed = 0, dups = 0;
  std::map<std::string, std::set<std::string>> keys;
  for (const auto& [seed, c] : samples) {
    const auto& p = c.problem;
    if (cdl::metric_facts(p).size() == seed->m_p.size()) ++count_ok;

    auto f = engine::figure_of(p);
    auto goal = p.goal ? engine::symbol_for(f, p.goal->quantity, p.goal->args) : std::nullopt;
    if (goal && !stated_symbols(p).contains(*goal)) ++fresh;

    bool split = cdl::relation_facts(p) == cdl::relation_facts(seed->problem) && !p.image_facts.empty();
    for (const auto& x : p.image_facts) split = split && std::holds_alternative<cdl::MetricFact>(x);
    if (split) ++partition;

    auto again = engine::deduce(p);
    if (again.solved() && std::abs(again.goal_value->value() - c.goal_value.value()) <=
                              1e-9 * std::max(1.0, std::abs(c.goal_value.value())) &&
        engine::replay(c.result, c.steps)) {
      ++replayed;
    }

    auto& seen = keys[seed->problem.id];
    if (seen.empty()) seen.insert(synth::problem_key(seed->problem));
    if (!seen.insert(synth::problem_key(p)).second) ++dups;
  }
  bool pass = count_ok == kWanted && fresh == kWanted && partition == kWanted && replayed == kWanted && dups == 0;
  return {pass, fmt("count %d, fresh goal %d, channel partition %d, replay %d of %d; %d duplicates", count_ok, fresh,
                    partition, replayed, kWanted, dups)};
}

// ---- 3 ----------------------------------------------------------------------

Outcome n_bound(const std::vector<synth::FormalizedSeed>& seeds) {
  constexpr int kDraws = 10000;
  std::vector<const synth::FormalizedSeed*> usable;
  for (const auto& s : seeds) {
    if (!s.m_p.empty() && s.m_all.size() > s.m_p.size()) usable.push_back(&s);
  }
  if (usable.empty()) return {false, "no seed with spare metrics"};
  int draws = 0, outside = 0, rich = 0, rich_complete = 0;
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const auto& s = *usable[i];
    const int bound = static_cast<int>(std::min(s.m_p.size(), s.m_all.size() - s.m_p.size()));
    const int share = kDraws / static_cast<int>(usable.size()) + (static_cast<int>(i) < kDraws % static_cast<int>(usable.size()) ? 1 : 0);
    std::set<int> seen;
    for (int k = 0; k < share; ++k, ++draws) {
      Rng rng(derive_seed(42, s.problem.id + "/mutate", static_cast<std::uint64_t>(k)));
      int n = synth::mutate_conditions(s, rng).second.n;
      if (n < 1 || n > bound) ++outside;
      seen.insert(n);
    }
    if (bound >= 2) {
      ++rich;
      if (static_cast<int>(seen.size()) == bound) ++rich_complete;
    }
  }
  bool pass = draws == kDraws && outside == 0 && rich_complete == rich;
  return {pass, fmt("%d draws, %d outside the bound; every n seen on %d/%d rich seeds", draws, outside, rich_complete,
                    rich)};
}

// ---- 4 ----------------------------------------------------------------------

Outcome layout_suite() {
  int feasible = 0, accepted = 0, tight = 0;
  for (const auto& spec : fixtures::layout_specs(true)) {
    ++feasible;
    auto s = layout::compile_constraints(spec.problem);
    Rng rng(derive_seed(42, spec.name));
    try {
      auto sol = layout::optimize(s, rng);
      ++accepted;
      auto rep = layout::check_thresholds(s, sol);
      if (rep.accepted && rep.max_incidence <= 1e-3 && rep.max_metric <= 1e-2) ++tight;
    } catch (const layout::LayoutError&) {
    }
  }
  int infeasible = 0, rejected = 0;
  for (const auto& spec : fixtures::layout_specs(false)) {
    ++infeasible;
    auto s = layout::compile_constraints(spec.problem);
    Rng rng(derive_seed(42, spec.name));
    try {
      layout::optimize(s, rng);
    } catch (const layout::LayoutError&) {
      ++rejected;
    }
  }

  // Analytic Jacobians against central differences.
  auto parsed = cdl::parse_problem(
      "Shape(AB,BC,CA)\nShape(AC,CD,DA)\nCollinear(AEB)\nCocircular(O,ABCD)\nParallelBetweenLine(AB,DC)\n"
      "PerpendicularBetweenLine(AC,BD)\nIsoscelesTriangle(ABC)\nIsBisectorOfAngle(AC,BAD)\nIsMidpointOfLine(E,AB)\n"
      "IsTangentOfCircle(DA,O)\nEqual(LengthOfLine(AB),3)\nEqual(MeasureOfAngle(ABC),70)\n"
      "Equal(RadiusOfCircle(O),2)\nEqual(DiameterOfCircle(O),4)\nEqual(PerimeterOf(ABC),9)\n"
      "Equal(AreaOf(ACD),5)\nEqual(LengthOfArc(OAB),2)\n",
      "gradients");
  auto s = layout::compile_constraints(parsed.problem);
  std::map<layout::ResidualKind, const layout::Residual*> by_kind;
  for (const auto& r : s.residuals) by_kind.emplace(r.kind, &r);
  const std::size_t nvars = 2 * s.points.size() + s.circles.size() + 1;
  const double h = 1e-6;
  int configs = 0, bad = 0;
  for (const auto& [kind, r] : by_kind) {
    for (int config = 0; config < 100; ++config, ++configs) {
      Rng rng(derive_seed(1234, layout::name_of(kind), static_cast<std::uint64_t>(config)));
      double box = kind == layout::ResidualKind::NonDegeneracy && config % 2 ? 15.0 : 300.0;
      std::vector<double> x(nvars);
      for (std::size_t i = 0; i < 2 * s.points.size(); ++i) x[i] = rng.uniform(0, box);
      for (std::size_t i = 2 * s.points.size(); i < nvars - 1; ++i) x[i] = rng.uniform(20, 120);
      x[nvars - 1] = rng.uniform(1, 4);
      auto jac = layout::jacobian(s, *r, x);
      bool ok = true;
      for (std::size_t v = 0; v < nvars; ++v) {
        auto up = x, down = x;
        up[v] += h;
        down[v] -= h;
        auto fu = layout::evaluate(s, *r, up), fd = layout::evaluate(s, *r, down);
        for (std::size_t c = 0; c < jac.size(); ++c) {
          double fdiff = (fu[c] - fd[c]) / (2 * h);
          double scale = 0;
          for (double g : jac[c]) scale = std::max(scale, std::abs(g));
          if (scale == 0 ? std::abs(fdiff) > 1e-9 : std::abs(jac[c][v] - fdiff) > 1e-4 * scale) ok = false;
        }
      }
      if (!ok) ++bad;
    }
  }
  bool pass = feasible == 20 && accepted >= 18 && tight == accepted && infeasible == 3 && rejected == 3 && bad == 0 &&
              by_kind.size() == 11;
  return {pass, fmt("feasible %d/%d accepted (%d within thresholds), infeasible %d/%d rejected, gradients %d/%d "
                    "configurations over %zu kinds",
                    accepted, feasible, tight, rejected, infeasible, configs - bad, configs, by_kind.size())};
}

// ---- 5 and 7 ------------------------------------------------------------------

pipeline::PipelineConfig fixture_run(const fs::path& out) {
  pipeline::PipelineConfig c;
  c.seed_paths = {fixtures::source_path("data/seeds")};
  c.out_dir = out;
  c.per_seed = 8;
  c.seed = 42;
  return c;
}

std::vector<nlohmann::json> dataset_rows(const fs::path& out) {
  std::vector<nlohmann::json> rows;
  std::ifstream in(out / "dataset.jsonl");
  for (std::string line; std::getline(in, line);) rows.push_back(nlohmann::json::parse(line));
  return rows;
}

Outcome rendering(const fs::path& out) {
  auto rows = dataset_rows(out);
  if (rows.empty()) return {false, "no records emitted"};
  int shape_ok = 0, secret = 0;
  std::map<int, int> edges;
  const std::regex fact_attr(R"re(data-fact="([^"]*)")re");
  for (const auto& row : rows) {
    const std::string id = row["id"];
    auto png = slurp(out / row["image"].get<std::string>());
    if (png.size() >= 24) {
      auto be32 = [&](std::size_t at) {
        return (static_cast<unsigned char>(png[at]) << 24) | (static_cast<unsigned char>(png[at + 1]) << 16) |
               (static_cast<unsigned char>(png[at + 2]) << 8) | static_cast<unsigned char>(png[at + 3]);
      };
      int w = be32(16), h = be32(20);
      bool allowed = std::find(std::begin(render::kShortEdges), std::end(render::kShortEdges), h) !=
                     std::end(render::kShortEdges);
      if (allowed && w == render::canvas_width(h) && std::abs(3.0 * w - 4.0 * h) <= 1.5) {
        ++shape_ok;
        edges[h]++;
      }
    }

    auto parsed = cdl::parse_problem_json(row["provenance"]["cdl"]);
    if (!parsed.ok()) continue;
    const auto& p = parsed.problem;
    std::vector<double> text_values, image_values;
    std::multiset<std::string> image_facts, drawn_facts;
    for (const auto& f : p.text_facts) {
      if (const auto* m = std::get_if<cdl::MetricFact>(&f)) text_values.push_back(m->value.value());
    }
    for (const auto& f : p.image_facts) {
      if (const auto* m = std::get_if<cdl::MetricFact>(&f)) {
        image_values.push_back(m->value.value());
        image_facts.insert(cdl::print_statement(*m));
      }
    }
    auto svg = slurp(out / "images" / (id + ".svg"));
    for (std::sregex_iterator it(svg.begin(), svg.end(), fact_attr), end; it != end; ++it) {
      drawn_facts.insert((*it)[1].str());
    }
    auto near = [](double a, double b) { return std::abs(a - b) <= std::max(1e-4, 1e-3 * std::abs(b)); };
    bool leak = false;
    for (double t : verbalize::numeric_tokens(row["question"].get<std::string>())) {
      bool stated = std::any_of(text_values.begin(), text_values.end(), [&](double v) { return near(t, v); });
      if (stated) continue;
      leak = leak || std::any_of(image_values.begin(), image_values.end(), [&](double v) { return near(t, v); });
    }
    if (!leak && drawn_facts == image_facts && !image_facts.empty()) ++secret;
  }
  const int n = static_cast<int>(rows.size());
  std::string mix;
  for (const auto& [h, k] : edges) mix += fmt(" %d:%d", h, k);
  return {shape_ok == n && secret == n,
          fmt("%d/%d canvases 4:3 with allowed short edge (%s), %d/%d records keep channel secrecy", shape_ok, n,
              mix.c_str() + 1, secret, n)};
}

Outcome determinism(const fs::path& a, double ta, const fs::path& b, double tb) {
  auto files = [](const fs::path& root) {
    std::set<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().filename() != "stats.json") names.insert(fs::relative(e.path(), root).string());
    }
    return names;
  };
  auto fa = files(a), fb = files(b);
  int differing = 0;
  for (const auto& name : fa) {
    if (!fb.contains(name) || slurp(a / name) != slurp(b / name)) ++differing;
  }
  const int pngs = static_cast<int>(std::count_if(fa.begin(), fa.end(), [](const std::string& s) { return s.ends_with(".png"); }));
  bool pass = fa == fb && differing == 0 && fa.contains("dataset.jsonl") && ta < 120.0 && tb < 120.0;
  return {pass, fmt("%zu files (%d PNG), %d differ; runs took %.1f s and %.1f s", fa.size(), pngs, differing, ta, tb)};
}

// ---- 6 ----------------------------------------------------------------------

Outcome verification(const std::vector<Sample>& samples) {
  constexpr int kCount = 200;
  if (samples.size() < static_cast<std::size_t>(kCount)) return {false, "not enough samples"};
  const auto& bank = verbalize::TemplateBank::builtin();
  const std::size_t stride = samples.size() / kCount;
  int clean = 0, caught = 0;
  for (int i = 0; i < kCount; ++i) {
    const auto& c = samples[static_cast<std::size_t>(i) * stride].candidate;
    Rng rng(derive_seed(42, "verify", static_cast<std::uint64_t>(i)));
    auto solution = verbalize::verbalize_solution(c.result, c.steps, bank, &rng);
    const double expected = c.goal_value.value();
    if (verbalize::verify_answer(solution, expected)) ++clean;
    const bool degrees = solution.ends_with("°.");
    const double delta = i % 2 ? -1.0 : 1.0;
    auto mutated = solution.substr(0, solution.rfind("The answer is ")) +
                   verbalize::answer_sentence(Number::real(expected + delta), degrees);
    if (!verbalize::verify_answer(mutated, expected)) ++caught;
  }
  return {clean == kCount && caught == kCount,
          fmt("%d/%d perturbed answers caught, %d/%d clean answers pass", caught, kCount, clean, kCount)};
}

// ---- 8 ----------------------------------------------------------------------

Outcome round_trip() {
  auto ingest = pipeline::ingest_seeds({fixtures::source_path("data/seeds")});
  int ok = 0;
  for (const auto& s : ingest.seeds) {
    const auto& p = s.problem;
    auto text = cdl::parse_problem(cdl::print_problem(p), p.id);
    auto json = cdl::parse_problem_json(cdl::to_json(p));
    if (text.ok() && json.ok() && p.same_structure(text.problem) && p.same_structure(json.problem) &&
        json.problem.id == p.id) {
      ++ok;
    }
  }
  const int n = static_cast<int>(ingest.seeds.size());
  return {n > 0 && ok == n && ingest.diagnostics.empty(),
          fmt("%d/%d seeds equal after text and JSON round trips", ok, n)};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const char* what, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", n, what, o.detail.c_str());
    std::fflush(stdout);
  };

  std::vector<synth::FormalizedSeed> seeds;
  for (const auto& p : fixtures::seeds()) seeds.push_back(synth::formalize(p));
  std::vector<Sample> samples;

  const auto base = fs::temp_directory_path() / ("geoforge_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  double ta = 0, tb = 0;
  auto run = [&](const fs::path& out) {
    auto t = std::chrono::steady_clock::now();
    pipeline::run_pipeline(fixture_run(out));
    return seconds_since(t);
  };

  report(1, "oracle suite", oracle_suite);
  report(2, "synthesis invariants", [&] { return candidate_invariants(seeds, samples); });
  report(3, "swap count bound", [&] { return n_bound(seeds); });
  report(4, "layout golden suite and gradients", layout_suite);
  report(5, "rendering", [&] {
    ta = run(base / "a");
    return rendering(base / "a");
  });
  report(6, "answer verification", [&] { return verification(samples); });
  report(7, "end-to-end determinism", [&] {
    if (ta == 0) ta = run(base / "a");
    tb = run(base / "b");
    return determinism(base / "a", ta, base / "b", tb);
  });
  report(8, "parser round trip", round_trip);

  fs::remove_all(base);
  return failed == 0 ? 0 : 1;
}
