#include "bilevel/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

#include "bilevel/parallel.hpp"
#include "bilevel/rng.hpp"

namespace bilevel {

std::string method_name(Method m) {
  switch (m) {
    case Method::Deterministic: return "deterministic";
    case Method::Probabilistic: return "probabilistic";
    case Method::Continuous: return "continuous";
    case Method::Bilevel: return "bilevel";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  if (name == "deterministic") return Method::Deterministic;
  if (name == "probabilistic") return Method::Probabilistic;
  if (name == "continuous") return Method::Continuous;
  if (name == "bilevel") return Method::Bilevel;
  return std::nullopt;
}

ContinuousState execute_plan(const Problem& problem,
                             const std::vector<ActionSpec>& plan,
                             const PhysicsConfig& physics) {
  // same stream for every method evaluating this problem (paired design)
  Rng rng = derive_rng(problem.seed, "exec");
  ContinuousState state = problem.init;
  for (const ActionSpec& a : plan) state = step(state, a, physics, rng);
  return state;
}

namespace {

std::string level_name(PlanLevel level) {
  switch (level) {
    case PlanLevel::Symbolic: return "symbolic";
    case PlanLevel::Continuous: return "continuous";
    case PlanLevel::Failed: return "failed";
  }
  return "?";
}

struct TrialWork {
  Problem problem;
  int n, k, trial;
};

}  // namespace

SuiteResult run_suite(const SuiteConfig& cfg,
                      const std::vector<Operator>& operators,
                      const Predictor& predictor, const Encoder& enc) {
  if (cfg.trials <= 0)
    throw std::invalid_argument("run_suite: trials must be > 0");
  if (cfg.ns.empty() || cfg.ks.empty())
    throw std::invalid_argument("run_suite: empty grid");
  if (cfg.methods.empty())
    throw std::invalid_argument("run_suite: no methods selected");

  std::vector<Operator> projection = deterministic_projection(operators, enc);

  std::vector<TrialWork> work;
  for (int n : cfg.ns)
    for (int k : cfg.ks)
      for (int t = 0; t < cfg.trials; ++t) {
        std::uint64_t pseed = derive_seed(
            cfg.seed, "problem/n" + std::to_string(n) + "/k" +
                          std::to_string(k) + "/" + std::to_string(t));
        ProblemGenConfig gen = cfg.problem_gen;
        gen.physics = cfg.physics;
        gen.epsilon = cfg.epsilon;
        work.push_back({generate_problem(n, k, pseed, gen), n, k, t});
      }

  struct TrialOutput {
    std::vector<TrialRecord> records;  // one per method
    std::vector<CandidateOutcome> pool;
  };
  std::vector<TrialOutput> outputs(work.size());

  parallel_for(work.size(), cfg.jobs, [&](std::size_t wi) {
    const TrialWork& tw = work[wi];
    const Problem& problem = tw.problem;
    auto [sym_init, sym_goal] = encode_problem(problem, enc);

    // candidate sets are shared across symbolic methods for this problem
    std::vector<PlanCandidate> prob_candidates;
    bool prob_ready = false;
    auto ensure_candidates = [&]() {
      if (prob_ready) return;
      std::vector<SampledDomain> domains = sample_domains(
          operators, cfg.planner.num_domains,
          derive_seed(problem.seed, "domains"));
      prob_candidates = probabilistic_plan(
          sym_init, sym_goal, domains, cfg.planner.solve_budget,
          cfg.planner.goal_convention, 1);
      prob_ready = true;
    };

    for (Method method : cfg.methods) {
      TrialRecord rec;
      rec.n = tw.n;
      rec.k = tw.k;
      rec.trial = tw.trial;
      rec.method = method;
      auto t0 = std::chrono::steady_clock::now();
      std::optional<std::vector<ActionSpec>> plan;

      switch (method) {
        case Method::Deterministic: {
          // the projection as a single "sampled" domain
          std::vector<SampledDomain> single(1);
          single[0].operators = projection;
          single[0].sample_index = 0;
          auto cands = probabilistic_plan(sym_init, sym_goal, single,
                                          cfg.planner.solve_budget,
                                          cfg.planner.goal_convention, 1);
          if (!cands.empty()) plan = cands.front().actions;
          break;
        }
        case Method::Probabilistic: {
          ensure_candidates();
          if (!prob_candidates.empty()) plan = prob_candidates.front().actions;
          break;
        }
        case Method::Continuous: {
          auto res = continuous_search(problem.init, problem.goal, predictor,
                                       cfg.planner.search);
          rec.expansions = res.expansions;
          plan = res.plan;
          if (plan) rec.level = PlanLevel::Continuous;
          break;
        }
        case Method::Bilevel: {
          BilevelConfig pc = cfg.planner;
          pc.jobs = 1;
          BilevelOutcome outcome = bilevel_plan(problem, operators, predictor,
                                                enc, pc, problem.seed);
          rec.level = outcome.level;
          rec.expansions = outcome.expansions;
          rec.verifier_calls = outcome.verifier_calls;
          plan = outcome.plan;
          break;
        }
      }

      rec.wall_time = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      rec.planned = plan.has_value();
      if (plan) {
        rec.plan_text = plan_to_text(*plan);
        ContinuousState final_state =
            execute_plan(problem, *plan, cfg.physics);
        rec.success = is_success(final_state, problem.goal, cfg.epsilon);
        if (method != Method::Continuous && method != Method::Bilevel)
          rec.level = PlanLevel::Symbolic;
      }
      outputs[wi].records.push_back(std::move(rec));
    }

    if (cfg.collect_candidates) {
      ensure_candidates();
      for (const PlanCandidate& cand : prob_candidates) {
        CandidateOutcome co;
        co.n = tw.n;
        co.k = tw.k;
        co.trial = tw.trial;
        co.problem = problem;
        co.actions = cand.actions;
        ContinuousState final_state =
            execute_plan(problem, cand.actions, cfg.physics);
        co.executed_success =
            is_success(final_state, problem.goal, cfg.epsilon);
        outputs[wi].pool.push_back(std::move(co));
      }
    }
  });

  SuiteResult result;
  std::map<std::tuple<int, int, Method>, CellResult> cells;
  for (std::size_t wi = 0; wi < outputs.size(); ++wi) {
    for (auto& rec : outputs[wi].records) {
      auto key = std::make_tuple(rec.n, rec.k, rec.method);
      CellResult& cell = cells[key];
      cell.n = rec.n;
      cell.k = rec.k;
      cell.method = rec.method;
      cell.trials++;
      if (rec.success) cell.successes++;
      cell.mean_wall_time += rec.wall_time;
      cell.mean_expansions += static_cast<double>(rec.expansions);
      result.records.push_back(std::move(rec));
    }
    for (auto& co : outputs[wi].pool)
      result.candidate_pool.push_back(std::move(co));
  }
  for (auto& [key, cell] : cells) {
    cell.mean_wall_time /= static_cast<double>(cell.trials);
    cell.mean_expansions /= static_cast<double>(cell.trials);
    result.cells.push_back(cell);
  }
  // records sorted by (n, k, trial, method order in config)
  std::sort(result.records.begin(), result.records.end(),
            [&](const TrialRecord& a, const TrialRecord& b) {
              if (a.n != b.n) return a.n < b.n;
              if (a.k != b.k) return a.k < b.k;
              if (a.trial != b.trial) return a.trial < b.trial;
              return static_cast<int>(a.method) < static_cast<int>(b.method);
            });
  return result;
}

namespace {

ConfusionRecord finalize_confusion(std::uint64_t tp, std::uint64_t fp,
                                   std::uint64_t tn, std::uint64_t fn) {
  ConfusionRecord rec;
  rec.tp = tp;
  rec.fp = fp;
  rec.tn = tn;
  rec.fn = fn;
  std::uint64_t total = tp + fp + tn + fn;
  rec.accuracy =
      total == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total);
  std::uint64_t f1_denom = 2 * tp + fp + fn;
  if (f1_denom > 0)
    rec.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(f1_denom);
  return rec;
}

}  // namespace

ConfusionRecord verifier_confusion(const std::vector<CandidateOutcome>& pool,
                                   const Predictor& predictor, double tau) {
  if (pool.empty())
    throw std::invalid_argument("verifier_confusion: empty candidate pool");
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& co : pool) {
    VerifierVerdict verdict =
        verify(co.actions, co.problem.init, co.problem.goal, predictor, tau);
    if (verdict.verified) {
      (co.executed_success ? tp : fp)++;
    } else {
      (co.executed_success ? fn : tn)++;
    }
  }
  return finalize_confusion(tp, fp, tn, fn);
}

std::vector<TauSweepEntry> sweep_tau(const std::vector<CandidateOutcome>& pool,
                                     const Predictor& predictor,
                                     const std::vector<double>& taus) {
  if (taus.size() < 2)
    throw std::invalid_argument("sweep_tau: need at least two thresholds");
  std::vector<TauSweepEntry> out;
  for (double tau : taus) {
    TauSweepEntry entry;
    entry.tau = tau;
    entry.overall = verifier_confusion(pool, predictor, tau);
    std::map<int, std::vector<CandidateOutcome>> by_n;
    for (const auto& co : pool) by_n[co.n].push_back(co);
    for (const auto& [n, sub] : by_n)
      entry.per_n.emplace_back(n, verifier_confusion(sub, predictor, tau));
    out.push_back(std::move(entry));
  }
  return out;
}

// --- emission ----------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string one_line_plan(const std::string& plan_text) {
  std::string out;
  for (char c : plan_text) out += c == '\n' ? ' ' : c;
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

void write_records(std::ostream& out, const std::vector<TrialRecord>& records,
                   bool emit_timings) {
  for (const auto& rec : records) {
    out << "n=" << rec.n << " k=" << rec.k << " trial=" << rec.trial
        << " method=" << method_name(rec.method)
        << " planned=" << (rec.planned ? 1 : 0)
        << " success=" << (rec.success ? 1 : 0)
        << " level=" << level_name(rec.level)
        << " expansions=" << rec.expansions
        << " verifier_calls=" << rec.verifier_calls;
    if (emit_timings) out << " wall=" << fmt(rec.wall_time);
    out << " plan=\"" << one_line_plan(rec.plan_text) << "\"\n";
  }
}

void write_cells_csv(std::ostream& out, const std::vector<CellResult>& cells,
                     bool emit_timings) {
  out << "n,k,method,successes,trials,success_rate,mean_expansions";
  if (emit_timings) out << ",mean_wall_time";
  out << "\n";
  for (const auto& c : cells) {
    out << c.n << "," << c.k << "," << method_name(c.method) << ","
        << c.successes << "," << c.trials << ","
        << fmt(static_cast<double>(c.successes) /
               static_cast<double>(c.trials))
        << "," << fmt(c.mean_expansions);
    if (emit_timings) out << "," << fmt(c.mean_wall_time);
    out << "\n";
  }
}

void write_summary_table(std::ostream& out,
                         const std::vector<CellResult>& cells) {
  // rows: (n, k); columns: methods in enum order
  std::vector<Method> methods;
  std::map<std::pair<int, int>, std::map<Method, const CellResult*>> grid;
  for (const auto& c : cells) {
    grid[{c.n, c.k}][c.method] = &c;
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);
  }
  std::sort(methods.begin(), methods.end());
  out << "| n | k |";
  for (Method m : methods) out << " " << method_name(m) << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < methods.size(); ++i) out << "---|";
  out << "\n";
  for (const auto& [nk, row] : grid) {
    out << "| " << nk.first << " | " << nk.second << " |";
    for (Method m : methods) {
      auto it = row.find(m);
      if (it == row.end()) {
        out << " - |";
      } else {
        double rate = 100.0 * static_cast<double>(it->second->successes) /
                      static_cast<double>(it->second->trials);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.1f%%", rate);
        out << " " << buf << " |";
      }
    }
    out << "\n";
  }
}

}  // namespace bilevel
