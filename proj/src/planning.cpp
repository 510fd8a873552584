#include "bilevel/planning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "bilevel/parallel.hpp"
#include "bilevel/rng.hpp"

namespace bilevel {

std::vector<PlanCandidate> probabilistic_plan(
    const SymbolicState& sym_init, const SymbolicState& sym_goal,
    const std::vector<SampledDomain>& domains, const SolveBudget& budget,
    const GoalConvention& convention, int jobs) {
  if (domains.empty())
    throw std::invalid_argument("probabilistic_plan: no sampled domains");

  struct DomainPlan {
    bool solved = false;
    std::vector<ActionSpec> plan;
  };
  std::vector<DomainPlan> per_domain(domains.size());
  parallel_for(domains.size(), jobs, [&](std::size_t d) {
    GroundTask task = ground(domains[d].operators, sym_init.n, sym_init,
                             sym_goal, convention);
    SolveResult res = solve(task, budget);
    if (res.status == SolveStatus::Solved) {
      per_domain[d].solved = true;
      per_domain[d].plan = std::move(res.plan);
    }
  });

  // deterministic fold by domain index
  std::uint64_t solved_count = 0;
  std::map<std::string, PlanCandidate> unique;
  for (std::size_t d = 0; d < per_domain.size(); ++d) {
    if (!per_domain[d].solved) continue;
    ++solved_count;
    std::string key = plan_to_text(per_domain[d].plan);
    auto [it, fresh] = unique.try_emplace(key);
    PlanCandidate& cand = it->second;
    if (fresh) {
      cand.actions = per_domain[d].plan;
      cand.key = key;
    }
    cand.occurrences++;
    cand.source_domains.push_back(domains[d].sample_index);
  }

  std::vector<PlanCandidate> out;
  out.reserve(unique.size());
  for (auto& [key, cand] : unique) {
    cand.probability =
        static_cast<double>(cand.occurrences) / solved_count;
    out.push_back(std::move(cand));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    if (a.actions.size() != b.actions.size())
      return a.actions.size() < b.actions.size();
    return a.key < b.key;
  });
  return out;
}

VerifierVerdict verify(const std::vector<ActionSpec>& plan,
                       const ContinuousState& x_init,
                       const ContinuousState& x_goal,
                       const Predictor& predictor, double tau_verify) {
  VerifierVerdict verdict;
  ContinuousState state = x_init;
  verdict.predicted_trajectory.push_back(state);
  for (const ActionSpec& a : plan) {
    EffectPrediction eff = predictor.predict(state, a);
    for (int i = 0; i < state.size(); ++i)
      state.objects[i].position += eff.per_object[i];
    verdict.predicted_trajectory.push_back(state);
  }
  verdict.predicted_final = state;
  double worst = 0.0;
  for (int i = 0; i < state.size(); ++i)
    worst = std::max(worst, (state.pos(i) - x_goal.pos(i)).norm());
  verdict.max_object_distance = worst;
  verdict.verified = worst < tau_verify;
  return verdict;
}

double heuristic(const ContinuousState& state, const ContinuousState& goal) {
  if (state.size() != goal.size())
    throw std::invalid_argument("heuristic: state/goal size mismatch");
  double h = 0.0;
  for (int i = 0; i < state.size(); ++i)
    h += (state.pos(i) - goal.pos(i)).norm();
  return h;
}

std::vector<ActionSpec> prune_actions(const ContinuousState& state,
                                      const ContinuousState& goal,
                                      double misplaced_threshold) {
  std::vector<ActionSpec> out;
  const int n = state.size();
  auto push_pair = [&](int pick, int place) {
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        ActionSpec a{pick, di, place, dj};
        if (std::find(out.begin(), out.end(), a) == out.end())
          out.push_back(a);
      }
  };
  for (int i = 0; i < n; ++i) {
    if ((state.pos(i) - goal.pos(i)).norm() <= misplaced_threshold) continue;
    // target: the object currently closest to o_i's goal position
    int best = 0;
    double best_dist = (state.pos(0) - goal.pos(i)).norm();
    for (int j = 1; j < n; ++j) {
      double d = (state.pos(j) - goal.pos(i)).norm();
      if (d < best_dist) {
        best = j;
        best_dist = d;
      }
    }
    push_pair(i, best);
    push_pair(i, i);
  }
  return out;
}

namespace {

struct QuantKey {
  std::vector<std::int64_t> cells;
  bool operator==(const QuantKey&) const = default;
};

struct QuantKeyHash {
  std::size_t operator()(const QuantKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto c : k.cells) {
      h ^= static_cast<std::uint64_t>(c);
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

QuantKey quantize(const ContinuousState& s, double grid) {
  QuantKey key;
  key.cells.reserve(static_cast<std::size_t>(s.size()) * 3);
  for (const auto& o : s.objects) {
    key.cells.push_back(static_cast<std::int64_t>(std::floor(o.position.x / grid)));
    key.cells.push_back(static_cast<std::int64_t>(std::floor(o.position.y / grid)));
    key.cells.push_back(static_cast<std::int64_t>(std::floor(o.position.z / grid)));
  }
  return key;
}

}  // namespace

ContinuousSearchResult continuous_search(const ContinuousState& x_init,
                                         const ContinuousState& x_goal,
                                         const Predictor& predictor,
                                         const SearchParams& params) {
  ContinuousSearchResult result;

  struct Node {
    ContinuousState state;
    int parent = -1;
    ActionSpec via;
    std::uint32_t g = 0;
  };
  struct Entry {
    double f;
    double h;
    std::uint64_t seq;
    int node;
    bool operator>(const Entry& o) const {
      if (f != o.f) return f > o.f;
      if (h != o.h) return h > o.h;
      return seq > o.seq;
    }
  };

  std::vector<Node> nodes;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::unordered_set<QuantKey, QuantKeyHash> visited;
  std::uint64_t seq = 0;

  nodes.push_back({x_init, -1, {}, 0});
  visited.insert(quantize(x_init, params.quantization));
  {
    double h0 = heuristic(x_init, x_goal);
    open.push({f_score(0, h0, params), h0, seq++, 0});
  }

  while (!open.empty()) {
    Entry entry = open.top();
    open.pop();
    const int cur = entry.node;
    const ContinuousState state = nodes[cur].state;

    if (entry.h < params.h_stop) {
      std::vector<ActionSpec> plan;
      for (int at = cur; nodes[at].parent >= 0; at = nodes[at].parent)
        plan.push_back(nodes[at].via);
      std::reverse(plan.begin(), plan.end());
      result.plan = std::move(plan);
      result.predicted_final = state;
      return result;
    }
    if (result.expansions >= params.expansion_cap) break;
    ++result.expansions;

    for (const ActionSpec& a :
         prune_actions(state, x_goal, params.misplaced_threshold)) {
      EffectPrediction eff = predictor.predict(state, a);
      ContinuousState next = state;
      for (int i = 0; i < next.size(); ++i)
        next.objects[i].position += eff.per_object[i];
      QuantKey key = quantize(next, params.quantization);
      if (visited.contains(key)) continue;
      visited.insert(std::move(key));
      std::uint32_t g = nodes[cur].g + 1;
      double h = heuristic(next, x_goal);
      nodes.push_back({std::move(next), cur, a, g});
      open.push({f_score(g, h, params), h, seq++,
                 static_cast<int>(nodes.size()) - 1});
    }
  }
  result.predicted_final = x_init;
  return result;
}

BilevelOutcome bilevel_plan(const Problem& problem,
                            const std::vector<Operator>& operators,
                            const Predictor& predictor, const Encoder& enc,
                            const BilevelConfig& cfg, std::uint64_t seed) {
  BilevelOutcome outcome;

  // Level 1: probabilistic symbolic planning
  auto [sym_init, sym_goal] = encode_problem(problem, enc);
  std::vector<SampledDomain> domains =
      sample_domains(operators, cfg.num_domains, derive_seed(seed, "domains"));
  outcome.candidates = probabilistic_plan(sym_init, sym_goal, domains,
                                          cfg.solve_budget,
                                          cfg.goal_convention, cfg.jobs);
  outcome.candidates_considered = outcome.candidates.size();

  // verification, in decreasing order of probability
  for (const PlanCandidate& cand : outcome.candidates) {
    ++outcome.verifier_calls;
    VerifierVerdict verdict = verify(cand.actions, problem.init, problem.goal,
                                     predictor, cfg.tau_verify);
    if (verdict.verified) {
      outcome.plan = cand.actions;
      outcome.level = PlanLevel::Symbolic;
      return outcome;
    }
  }

  // Level 2: continuous search fallback
  ContinuousSearchResult search =
      continuous_search(problem.init, problem.goal, predictor, cfg.search);
  outcome.expansions = search.expansions;
  if (search.plan) {
    outcome.plan = std::move(search.plan);
    outcome.level = PlanLevel::Continuous;
  } else {
    outcome.level = PlanLevel::Failed;
  }
  return outcome;
}

}  // namespace bilevel
