#ifndef BILEVEL_PLANNING_HPP
#define BILEVEL_PLANNING_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bilevel/abstraction.hpp"
#include "bilevel/dynamics.hpp"
#include "bilevel/operators.hpp"
#include "bilevel/pddl.hpp"
#include "bilevel/world.hpp"

namespace bilevel {

struct PlanCandidate {
  std::vector<ActionSpec> actions;
  double probability = 0.0;   // occurrences / solved domains
  std::uint64_t occurrences = 0;
  std::vector<int> source_domains;
  std::string key;            // canonical plan-text encoding
};

struct VerifierVerdict {
  bool verified = false;
  ContinuousState predicted_final;
  double max_object_distance = 0.0;
  std::vector<ContinuousState> predicted_trajectory;  // includes X_init
};

struct SearchParams {
  double w = 1.5;                    // heuristic weight
  double step_cost = 0.10;           // meters-equivalent per action in f
  double h_stop = 0.05;              // return once h drops below this
  std::uint64_t expansion_cap = 10000;
  double quantization = 0.01;        // duplicate-detection grid
  double misplaced_threshold = 0.05;
};

enum class PlanLevel { Symbolic, Continuous, Failed };

struct BilevelOutcome {
  std::optional<std::vector<ActionSpec>> plan;
  PlanLevel level = PlanLevel::Failed;
  std::uint64_t candidates_considered = 0;
  std::uint64_t verifier_calls = 0;
  std::uint64_t expansions = 0;  // continuous-search expansions
  std::vector<PlanCandidate> candidates;  // ranked, for analysis
};

struct BilevelConfig {
  int num_domains = 100;
  double tau_verify = 0.07;
  SolveBudget solve_budget;
  SearchParams search;
  GoalConvention goal_convention;
  int jobs = 1;
};

// Solve every sampled domain, deduplicate plans by their canonical encoding,
// and rank by probability (descending), then length, then encoding.
std::vector<PlanCandidate> probabilistic_plan(
    const SymbolicState& sym_init, const SymbolicState& sym_goal,
    const std::vector<SampledDomain>& domains, const SolveBudget& budget = {},
    const GoalConvention& convention = {}, int jobs = 1);

// Roll the plan through the effect predictor (positions only) and compare the
// predicted final state with the goal, per object.
VerifierVerdict verify(const std::vector<ActionSpec>& plan,
                       const ContinuousState& x_init,
                       const ContinuousState& x_goal,
                       const Predictor& predictor, double tau_verify);

// sum over objects of the Euclidean distance to the goal position
double heuristic(const ContinuousState& state, const ContinuousState& goal);

// Goal-directed action candidates: for each misplaced object, all offset
// combinations toward the object currently closest to its goal position,
// plus all self-placements. Deduplicated; a subset of legal_actions.
std::vector<ActionSpec> prune_actions(const ContinuousState& state,
                                      const ContinuousState& goal,
                                      double misplaced_threshold);

// f-score blend: g action steps cost step_cost meters each
inline double f_score(std::uint32_t g, double h, const SearchParams& p) {
  return static_cast<double>(g) * p.step_cost + p.w * h;
}

struct ContinuousSearchResult {
  std::optional<std::vector<ActionSpec>> plan;
  std::uint64_t expansions = 0;
  ContinuousState predicted_final;
};

// Weighted A* directly in continuous state space; successors come from the
// effect predictor; duplicate detection on a quantized position grid.
ContinuousSearchResult continuous_search(const ContinuousState& x_init,
                                         const ContinuousState& x_goal,
                                         const Predictor& predictor,
                                         const SearchParams& params);

// Algorithm: encode the problem, sample N domains, plan probabilistically,
// verify candidates in decreasing probability order, and fall back to
// continuous search when no candidate verifies.
BilevelOutcome bilevel_plan(const Problem& problem,
                            const std::vector<Operator>& operators,
                            const Predictor& predictor, const Encoder& enc,
                            const BilevelConfig& cfg, std::uint64_t seed);

}  // namespace bilevel

#endif
