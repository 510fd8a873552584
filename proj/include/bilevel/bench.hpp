#ifndef BILEVEL_BENCH_HPP
#define BILEVEL_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bilevel/planning.hpp"

namespace bilevel {

enum class Method { Deterministic, Probabilistic, Continuous, Bilevel };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct CellResult {
  int n = 0;
  int k = 0;
  Method method = Method::Deterministic;
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double mean_wall_time = 0.0;   // seconds
  double mean_expansions = 0.0;
};

struct TrialRecord {
  int n = 0, k = 0, trial = 0;
  Method method = Method::Deterministic;
  bool planned = false;
  bool success = false;
  PlanLevel level = PlanLevel::Failed;
  std::string plan_text;
  std::uint64_t expansions = 0;
  std::uint64_t verifier_calls = 0;
  double wall_time = 0.0;
};

// one symbolic candidate paired with its executed outcome, for the verifier
// classification analysis
struct CandidateOutcome {
  int n = 0, k = 0, trial = 0;
  Problem problem;
  std::vector<ActionSpec> actions;
  bool executed_success = false;
};

struct ConfusionRecord {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  std::optional<double> f1;  // absent when 2tp+fp+fn == 0
};

struct SuiteConfig {
  std::vector<int> ns = {2, 3};
  std::vector<int> ks = {1, 2, 3};
  int trials = 50;
  std::vector<Method> methods = {Method::Deterministic, Method::Probabilistic,
                                 Method::Continuous, Method::Bilevel};
  PhysicsConfig physics;          // execution & problem-generation physics
  ProblemGenConfig problem_gen;   // epsilon etc.; physics copied from above
  BilevelConfig planner;
  double epsilon = 0.05;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool collect_candidates = true;  // keep the verifier-evaluation pool
};

struct SuiteResult {
  std::vector<CellResult> cells;
  std::vector<TrialRecord> records;
  std::vector<CandidateOutcome> candidate_pool;
};

// Paired evaluation: every method in a cell sees byte-identical problems and
// the same execution noise stream. Problems come from
// derive_seed(seed, "problem/n<k>/<k>/<trial>"); plan execution replays the
// plan open-loop in the simulator and scores with is_success.
SuiteResult run_suite(const SuiteConfig& cfg,
                      const std::vector<Operator>& operators,
                      const Predictor& predictor, const Encoder& enc);

// open-loop plan execution with the per-problem noise stream
ContinuousState execute_plan(const Problem& problem,
                             const std::vector<ActionSpec>& plan,
                             const PhysicsConfig& physics);

ConfusionRecord verifier_confusion(const std::vector<CandidateOutcome>& pool,
                                   const Predictor& predictor, double tau);

// per-tau, per-object-count confusion records
struct TauSweepEntry {
  double tau = 0.0;
  std::vector<std::pair<int, ConfusionRecord>> per_n;
  ConfusionRecord overall;
};
std::vector<TauSweepEntry> sweep_tau(const std::vector<CandidateOutcome>& pool,
                                     const Predictor& predictor,
                                     const std::vector<double>& taus);

// --- emission ---------------------------------------------------------------

// line-delimited per-(problem, method) records; timing fields are included
// only when emit_timings is set, keeping default output byte-reproducible
void write_records(std::ostream& out, const std::vector<TrialRecord>& records,
                   bool emit_timings);
// aggregate CSV, one row per (cell, method)
void write_cells_csv(std::ostream& out, const std::vector<CellResult>& cells,
                     bool emit_timings);
// plain-text success-rate table, cells by method
void write_summary_table(std::ostream& out,
                         const std::vector<CellResult>& cells);

}  // namespace bilevel

#endif
