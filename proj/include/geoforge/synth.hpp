#pragma once

// New problems from a seed: swap some statement metrics for derived ones,
// pick a fresh goal, make sure the engine reaches it, and split the metric
// conditions between the text and the diagram.

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoforge/cdl.hpp"
#include "geoforge/engine.hpp"
#include "geoforge/rng.hpp"

namespace geoforge::synth {

struct FormalizedSeed {
  cdl::FormalProblem problem;
  engine::DeductionResult deduction;
  engine::MetricSet m_p;    // statement metrics
  engine::MetricSet m_all;  // closure metrics
};

FormalizedSeed formalize(const cdl::FormalProblem& p, const engine::DeductionBudget& budget = {});

enum class Rejection { SeedExhausted, NoGoalAvailable, Invalid, Inconsistent, NoInference, ZeroStep, Duplicate };
std::string_view name_of(Rejection r);

struct SynthError : std::runtime_error {
  Rejection reason;
  SynthError(Rejection r, const std::string& what) : std::runtime_error(what), reason(r) {}
};

struct SwapRecord {
  engine::MetricSet removed;
  engine::MetricSet added;
  int n = 0;
};

enum class GoalProvenance { Original, FallbackLastInference };
std::string_view name_of(GoalProvenance g);

struct SynthesisCandidate {
  cdl::FormalProblem problem;
  engine::DeductionResult result;
  std::vector<int> steps;  // slice of result.trace ending at the goal
  Number goal_value;
  SwapRecord swap;
  GoalProvenance provenance = GoalProvenance::Original;
  int attempt = 0;
};

struct SynthOptions {
  double image_ratio = 0.5;
  int attempts_per_problem = 10;  // max consecutive rejections = this * m
  engine::DeductionBudget budget{};
};

struct SynthesisBatch {
  std::string seed_id;
  std::uint64_t rng_seed = 0;
  std::vector<SynthesisCandidate> candidates;
  std::map<std::string, int> diagnostics;  // rejection reason -> count
  int attempts = 0;
};

// Replaces n statement metrics by n closure metrics. Relation facts and
// constructions are kept; the metrics all land in the text channel until
// allocate_channels runs. Throws SynthError(SeedExhausted).
std::pair<cdl::FormalProblem, SwapRecord> mutate_conditions(const FormalizedSeed& seed, Rng& rng);

// Uniform over closure metrics that the statement does not mention.
// Throws SynthError(NoGoalAvailable).
cdl::Goal select_goal(const cdl::FormalProblem& mutated, const engine::MetricSet& m_all, Rng& rng);

// Runs the engine on a problem with a goal. Falls back to the last metric
// the trace determined when the goal is out of reach. Throws SynthError.
SynthesisCandidate ensure_solvable(cdl::FormalProblem p, const engine::DeductionBudget& budget = {});

struct Channels {
  std::vector<cdl::StatementFact> text;
  std::vector<cdl::StatementFact> image;
};

// Each metric goes to the image with probability image_ratio, and at least
// one does when any exist. Relations stay in the text.
Channels allocate_channels(const std::vector<cdl::StatementFact>& facts, Rng& rng, double image_ratio);

// Extra acceptance test applied to each solvable candidate; returns an empty
// string to accept or a rejection reason.
using LateCheck = std::function<std::string(SynthesisCandidate&)>;

SynthesisBatch synthesize_batch(const FormalizedSeed& seed, int m, std::uint64_t rng_seed,
                                const SynthOptions& options = {}, const LateCheck& late = {});

// Identity of a problem for deduplication: statement facts and goal, ignoring
// channel and provenance id.
std::string problem_key(const cdl::FormalProblem& p);

}  // namespace geoforge::synth
