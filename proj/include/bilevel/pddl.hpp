#ifndef BILEVEL_PDDL_HPP
#define BILEVEL_PDDL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bilevel/abstraction.hpp"
#include "bilevel/operators.hpp"
#include "bilevel/world.hpp"

namespace bilevel {

// small dynamic bit set over the ground atom universe
struct BitVec {
  std::vector<std::uint64_t> w;

  explicit BitVec(int bits = 0) : w((bits + 63) / 64, 0) {}
  void set(int i) { w[i >> 6] |= 1ULL << (i & 63); }
  bool get(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  bool subset_of(const BitVec& o) const {
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] & ~o.w[i]) return false;
    return true;
  }
  bool disjoint_with(const BitVec& o) const {
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] & o.w[i]) return false;
    return true;
  }
  bool any() const {
    for (auto x : w)
      if (x) return true;
    return false;
  }
  bool operator==(const BitVec&) const = default;
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto x : w) {
      h ^= x;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

struct GroundAction {
  BitVec pre_pos, pre_neg, add, del;
  ActionSpec spec;
  std::string name;  // "(schema oX oY)"
};

// Propositional STRIPS task with negative preconditions and a two-sided goal.
struct GroundTask {
  int n = 0, d_z = 0, K = 0;
  int num_atoms = 0;
  BitVec init;
  BitVec goal_pos, goal_neg;
  std::vector<GroundAction> actions;

  int unary_atom(int d, int i) const { return d * n + i; }
  int relational_atom(int k, int i, int j) const {
    return d_z * n + (k * n + i) * n + j;
  }
  bool applicable(const BitVec& state, const GroundAction& a) const {
    return a.pre_pos.subset_of(state) && a.pre_neg.disjoint_with(state);
  }
  BitVec apply(const BitVec& state, const GroundAction& a) const {
    BitVec next = state;
    for (std::size_t i = 0; i < next.w.size(); ++i)
      next.w[i] = (next.w[i] & ~a.del.w[i]) | a.add.w[i];
    return next;
  }
  bool goal_satisfied(const BitVec& state) const {
    return goal_pos.subset_of(state) && goal_neg.disjoint_with(state);
  }
  std::vector<int> applicable_actions(const BitVec& state) const;
};

// Which relational heads contribute their zero bits to the goal condition as
// must-not-hold atoms. Positive goal bits of every head are always required.
struct GoalConvention {
  std::vector<int> negative_goal_heads = {0};  // default: the "on" head
};

// Instantiate lifted operators over the problem's objects. Pair-pattern
// schemas range over all ordered pairs (self pairs included); self-pattern
// schemas range over single objects. Instantiations whose add and delete
// sets collide are skipped.
GroundTask ground(const std::vector<Operator>& domain, int num_objects,
                  const SymbolicState& init, const SymbolicState& goal,
                  const GoalConvention& convention = {});

struct SolveBudget {
  std::uint64_t max_expansions = 100000;
  double wall_seconds = 5.0;  // <= 0 disables the wall-clock cap
};

enum class SolveStatus { Solved, Exhausted, Unsolvable };
enum class SearchMode {
  GreedyThenAStar,  // satisficing: GBFS with h_add, A* retry on cap
  Greedy,
  AStarOptimal      // admissible h_max; returned plans are shortest
};

struct SolveResult {
  SolveStatus status = SolveStatus::Unsolvable;
  std::vector<ActionSpec> plan;
  std::vector<int> action_indices;
  std::uint64_t expansions = 0;
};

// Returned plans are replayed against the ground task before being handed
// back; a plan that fails its own replay is a bug, not a result.
SolveResult solve(const GroundTask& task, const SolveBudget& budget = {},
                  SearchMode mode = SearchMode::GreedyThenAStar);

// --- text emission / parsing ------------------------------------------------

// PDDL 1.2, requirements :strips :typing :negative-preconditions; byte-stable
// for equal domains. All operators must be deterministic.
std::string emit_pddl(const std::vector<Operator>& domain, const Encoder& enc,
                      const std::string& domain_name = "tabletop");

// PPDDL 1.0 with probabilistic effects; single-branch operators emit a plain
// effect.
std::string emit_ppddl(const std::vector<Operator>& ops, const Encoder& enc,
                       const std::string& domain_name = "tabletop");

std::string emit_problem(int num_objects, const SymbolicState& init,
                         const SymbolicState& goal, const Encoder& enc,
                         const GoalConvention& convention = {},
                         const std::string& problem_name = "task",
                         const std::string& domain_name = "tabletop");

// parse emit_pddl output back into operators (round-trip check support)
std::vector<Operator> parse_pddl_domain(const std::string& text,
                                        const Encoder& enc);

struct PlanParseError : std::runtime_error {
  int line;
  PlanParseError(int line_, const std::string& what)
      : std::runtime_error(what), line(line_) {}
};

// plan files: one "(schema oI [oJ])" per line, ';' comments. The schema name
// encodes the offsets (pick-place_dm1_d0...); trailing name parts are
// ignored.
std::vector<ActionSpec> parse_plan(const std::string& text);
std::string plan_to_text(const std::vector<ActionSpec>& plan);

// External planner contract: write domain/problem files into a fresh
// directory, run `command` with {domain} {problem} {plan} substituted, read
// the plan file back.
std::optional<std::vector<ActionSpec>> solve_with_external_planner(
    const std::vector<Operator>& domain, int num_objects,
    const SymbolicState& init, const SymbolicState& goal, const Encoder& enc,
    const std::string& command, const GoalConvention& convention = {});

}  // namespace bilevel

#endif
