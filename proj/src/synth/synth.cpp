#include "geoforge/synth.hpp"

#include <algorithm>
#include <set>

namespace geoforge::synth {
namespace {

using engine::Metric;
using engine::MetricSet;

cdl::MetricFact to_fact(const Metric& m) { return {m.quantity, m.args, m.value}; }

bool contains(const MetricSet& set, const engine::Symbol& s) {
  return std::any_of(set.begin(), set.end(), [&](const Metric& m) { return m.symbol == s; });
}

// The seed's own spelling of a statement metric, so kept conditions read the
// way the seed wrote them.
cdl::MetricFact original_spelling(const cdl::FormalProblem& p, const engine::Figure& f, const Metric& m) {
  for (const auto& fact : cdl::metric_facts(p)) {
    if (engine::symbol_for(f, fact.quantity, fact.args) == m.symbol) return fact;
  }
  return to_fact(m);
}

}  // namespace

std::string_view name_of(Rejection r) {
  switch (r) {
    case Rejection::SeedExhausted: return "SeedExhausted";
    case Rejection::NoGoalAvailable: return "NoGoalAvailable";
    case Rejection::Invalid: return "Invalid";
    case Rejection::Inconsistent: return "Inconsistent";
    case Rejection::NoInference: return "NoInference";
    case Rejection::ZeroStep: return "ZeroStep";
    case Rejection::Duplicate: return "Duplicate";
  }
  return "?";
}

std::string_view name_of(GoalProvenance g) {
  return g == GoalProvenance::Original ? "Original" : "FallbackLastInference";
}

FormalizedSeed formalize(const cdl::FormalProblem& p, const engine::DeductionBudget& budget) {
  FormalizedSeed s{p, engine::deduce(p, budget), {}, {}};
  s.m_all = engine::extract_metrics(s.deduction);
  s.m_p = engine::statement_metrics(p, s.deduction.figure);
  // A statement metric the catalog cannot express (none today) would break
  // m_p within m_all; keep only those the closure holds.
  std::erase_if(s.m_p, [&](const Metric& m) { return !contains(s.m_all, m.symbol); });
  return s;
}

std::pair<cdl::FormalProblem, SwapRecord> mutate_conditions(const FormalizedSeed& seed, Rng& rng) {
  MetricSet spare;
  for (const auto& m : seed.m_all) {
    if (!contains(seed.m_p, m.symbol)) spare.push_back(m);
  }
  if (spare.empty() || seed.m_p.empty()) throw SynthError(Rejection::SeedExhausted, "no spare metric conditions");

  SwapRecord swap;
  swap.n = static_cast<int>(rng.between(1, static_cast<std::int64_t>(std::min(seed.m_p.size(), spare.size()))));
  auto n = static_cast<std::size_t>(swap.n);
  std::vector<bool> removed(seed.m_p.size(), false);
  for (auto i : rng.sample_indices(seed.m_p.size(), n)) {
    removed[i] = true;
    swap.removed.push_back(seed.m_p[i]);
  }
  for (auto i : rng.sample_indices(spare.size(), n)) swap.added.push_back(spare[i]);

  cdl::FormalProblem out;
  out.id = seed.problem.id;
  out.constructions = seed.problem.constructions;
  for (const auto& r : cdl::relation_facts(seed.problem)) out.text_facts.emplace_back(r);
  for (std::size_t i = 0; i < seed.m_p.size(); ++i) {
    if (!removed[i]) out.text_facts.emplace_back(original_spelling(seed.problem, seed.deduction.figure, seed.m_p[i]));
  }
  for (const auto& m : swap.added) out.text_facts.emplace_back(to_fact(m));
  return {std::move(out), std::move(swap)};
}

cdl::Goal select_goal(const cdl::FormalProblem& mutated, const MetricSet& m_all, Rng& rng) {
  auto figure = engine::figure_of(mutated);
  std::set<engine::Symbol> stated;
  for (const auto& f : cdl::metric_facts(mutated)) {
    if (auto s = engine::symbol_for(figure, f.quantity, f.args)) stated.insert(*s);
  }
  MetricSet open;
  for (const auto& m : m_all) {
    if (!stated.count(m.symbol)) open.push_back(m);
  }
  if (open.empty()) throw SynthError(Rejection::NoGoalAvailable, "every closure metric is stated");
  const auto& g = open.size() == 1 ? open.front() : rng.pick(open);
  return {g.quantity, g.args};
}

SynthesisCandidate ensure_solvable(cdl::FormalProblem p, const engine::DeductionBudget& budget) {
  if (!p.goal) throw SynthError(Rejection::Invalid, "problem has no goal");
  auto report = cdl::validate(p);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw SynthError(Rejection::Invalid, std::string(cdl::name_of(v.kind)) + ": " + v.detail);
  }
  SynthesisCandidate c;
  c.result = engine::deduce(p, budget);
  if (c.result.inconsistent()) throw SynthError(Rejection::Inconsistent, *c.result.inconsistency);

  if (!c.result.solved()) {
    // Last step whose conclusion is a catalog metric the statement lacks.
    auto stated = engine::statement_metrics(p, c.result.figure);
    std::optional<std::pair<cdl::Quantity, cdl::PointTuple>> head;
    for (auto it = c.result.trace.rbegin(); it != c.result.trace.rend() && !head; ++it) {
      const auto* v = std::get_if<engine::ValueFact>(&c.result.store.fact(it->conclusion).body);
      if (!v) continue;
      const auto& sym = c.result.store.symbol(v->symbol);
      if (contains(stated, sym)) continue;
      head = engine::head_of(sym);
    }
    if (!head) throw SynthError(Rejection::NoInference, "the trace determines no new metric");
    p.goal = cdl::Goal{head->first, head->second};
    c.provenance = GoalProvenance::FallbackLastInference;
    c.result = engine::deduce(p, budget);
    if (c.result.inconsistent()) throw SynthError(Rejection::Inconsistent, *c.result.inconsistency);
    if (!c.result.solved()) throw SynthError(Rejection::NoInference, "fallback goal not reproduced");
  }
  c.steps = engine::slice_trace(c.result, *c.result.goal_symbol);
  if (c.steps.empty()) throw SynthError(Rejection::ZeroStep, "goal needs no derivation");
  c.goal_value = *c.result.goal_value;
  c.problem = std::move(p);
  return c;
}

Channels allocate_channels(const std::vector<cdl::StatementFact>& facts, Rng& rng, double image_ratio) {
  Channels out;
  std::vector<std::size_t> metric_at;  // positions in facts of metric facts
  std::vector<bool> to_image(facts.size(), false);
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (!std::holds_alternative<cdl::MetricFact>(facts[i])) continue;
    metric_at.push_back(i);
    to_image[i] = rng.chance(image_ratio);
  }
  bool any = std::any_of(metric_at.begin(), metric_at.end(), [&](std::size_t i) { return to_image[i]; });
  if (!metric_at.empty() && !any) to_image[metric_at[rng.below(metric_at.size())]] = true;
  for (std::size_t i = 0; i < facts.size(); ++i) (to_image[i] ? out.image : out.text).push_back(facts[i]);
  return out;
}

std::string problem_key(const cdl::FormalProblem& p) {
  std::vector<std::string> parts;
  for (const auto& r : cdl::relation_facts(p)) parts.push_back("R" + cdl::relation_key(r));
  for (const auto& m : cdl::metric_facts(p)) {
    parts.push_back("M" + cdl::head_key(m.quantity, m.args) + "=" + m.value.to_string());
  }
  for (const auto& c : p.constructions) parts.push_back("C" + cdl::print_statement(c));
  std::sort(parts.begin(), parts.end());
  std::string key;
  for (const auto& s : parts) key += s + ";";
  if (p.goal) key += "G" + cdl::head_key(p.goal->quantity, p.goal->args);
  return key;
}

SynthesisBatch synthesize_batch(const FormalizedSeed& seed, int m, std::uint64_t rng_seed, const SynthOptions& options,
                                const LateCheck& late) {
  SynthesisBatch batch;
  batch.seed_id = seed.problem.id;
  batch.rng_seed = rng_seed;
  if (m < 1) return batch;
  if (seed.m_p.empty() || seed.m_all.size() <= seed.m_p.size()) {
    batch.diagnostics[std::string(name_of(Rejection::SeedExhausted))]++;
    return batch;
  }

  std::set<std::string> seen{problem_key(seed.problem)};
  const int max_misses = options.attempts_per_problem * m;
  int misses = 0;
  while (static_cast<int>(batch.candidates.size()) < m && misses < max_misses) {
    const int attempt = batch.attempts++;
    Rng rng(derive_seed(rng_seed, seed.problem.id, static_cast<std::uint64_t>(attempt)));
    try {
      auto [problem, swap] = mutate_conditions(seed, rng);
      problem.goal = select_goal(problem, seed.m_all, rng);
      auto statement = std::move(problem.text_facts);
      auto channels = allocate_channels(statement, rng, options.image_ratio);
      problem.text_facts = std::move(channels.text);
      problem.image_facts = std::move(channels.image);
      problem.id = seed.problem.id + "_" + std::to_string(batch.candidates.size());

      auto candidate = ensure_solvable(std::move(problem), options.budget);
      if (!seen.insert(problem_key(candidate.problem)).second) {
        throw SynthError(Rejection::Duplicate, "already generated");
      }
      candidate.swap = std::move(swap);
      candidate.attempt = attempt;
      if (late) {
        if (auto reason = late(candidate); !reason.empty()) {
          batch.diagnostics[reason]++;
          ++misses;
          continue;
        }
      }
      batch.candidates.push_back(std::move(candidate));
      misses = 0;
    } catch (const SynthError& e) {
      batch.diagnostics[std::string(name_of(e.reason))]++;
      if (e.reason == Rejection::SeedExhausted) break;
      ++misses;
    }
  }
  if (misses >= max_misses) batch.diagnostics["GaveUp"]++;
  return batch;
}

}  // namespace geoforge::synth
