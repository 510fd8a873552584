#include "bilevel/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace bilevel {

std::vector<int> GroundTask::applicable_actions(const BitVec& state) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (applicable(state, actions[i])) out.push_back(static_cast<int>(i));
  return out;
}

// --- grounding ---------------------------------------------------------------

namespace {

// map a vocabulary literal to a ground atom for arguments (x, y)
int ground_atom(const GroundTask& task, const LiteralVocabulary& vocab,
                int idx, int x, int y) {
  const int pred = vocab.predicate(idx);
  const int variant = vocab.arg_variant(idx);
  if (vocab.is_unary(idx)) return task.unary_atom(pred, variant == 0 ? x : y);
  const int head = pred - vocab.d_z;
  return variant == 0 ? task.relational_atom(head, x, y)
                      : task.relational_atom(head, y, x);
}

std::string object_name(int i) { return "o" + std::to_string(i); }

}  // namespace

GroundTask ground(const std::vector<Operator>& domain, int num_objects,
                  const SymbolicState& init, const SymbolicState& goal,
                  const GoalConvention& convention) {
  if (init.n != num_objects || goal.n != num_objects ||
      init.d_z != goal.d_z || init.K != goal.K)
    throw std::invalid_argument("ground: symbolic state dimensions mismatch");

  GroundTask task;
  task.n = num_objects;
  task.d_z = init.d_z;
  task.K = init.K;
  task.num_atoms = task.d_z * task.n + task.K * task.n * task.n;

  task.init = BitVec(task.num_atoms);
  for (int i = 0; i < task.n; ++i)
    for (int d = 0; d < task.d_z; ++d)
      if (init.u(i, d)) task.init.set(task.unary_atom(d, i));
  for (int k = 0; k < task.K; ++k)
    for (int i = 0; i < task.n; ++i)
      for (int j = 0; j < task.n; ++j)
        if (init.r(k, i, j)) task.init.set(task.relational_atom(k, i, j));

  task.goal_pos = BitVec(task.num_atoms);
  task.goal_neg = BitVec(task.num_atoms);
  for (int i = 0; i < task.n; ++i)
    for (int d = 0; d < task.d_z; ++d)
      if (goal.u(i, d)) task.goal_pos.set(task.unary_atom(d, i));
  for (int k = 0; k < task.K; ++k) {
    bool negative_head =
        std::find(convention.negative_goal_heads.begin(),
                  convention.negative_goal_heads.end(),
                  k) != convention.negative_goal_heads.end();
    for (int i = 0; i < task.n; ++i)
      for (int j = 0; j < task.n; ++j) {
        if (goal.r(k, i, j))
          task.goal_pos.set(task.relational_atom(k, i, j));
        else if (negative_head && i != j)
          task.goal_neg.set(task.relational_atom(k, i, j));
      }
  }

  for (const auto& op : domain) {
    if (!op.deterministic())
      throw std::invalid_argument("ground: operator '" + op.name +
                                  "' is probabilistic");
    LiteralVocabulary vocab{task.d_z, task.K, op.pattern};
    const EffectBranch& eff = op.branches.front();
    auto instantiate = [&](int x, int y) {
      GroundAction ga;
      ga.pre_pos = BitVec(task.num_atoms);
      ga.pre_neg = BitVec(task.num_atoms);
      ga.add = BitVec(task.num_atoms);
      ga.del = BitVec(task.num_atoms);
      for (int idx = 0; idx < vocab.size(); ++idx) {
        int atom = ground_atom(task, vocab, idx, x, y);
        std::uint32_t bit = 1u << idx;
        if (op.pre_bits & bit)
          ga.pre_pos.set(atom);
        else
          ga.pre_neg.set(atom);
        if (eff.add_bits & bit) ga.add.set(atom);
        if (eff.del_bits & bit) ga.del.set(atom);
      }
      if (!ga.add.disjoint_with(ga.del)) return;  // collapsed effect
      ga.spec = {x, op.pick_offset, y, op.place_offset};
      ga.name = "(" + op.name + " " + object_name(x) +
                (op.pattern == ParamPattern::Pair ? " " + object_name(y) : "") +
                ")";
      task.actions.push_back(std::move(ga));
    };
    if (op.pattern == ParamPattern::Self) {
      for (int x = 0; x < task.n; ++x) instantiate(x, x);
    } else {
      for (int x = 0; x < task.n; ++x)
        for (int y = 0; y < task.n; ++y) instantiate(x, y);
    }
  }
  return task;
}

// --- search ------------------------------------------------------------------

namespace {

constexpr std::uint32_t kInfCost = 0x3fffffff;

// Relaxation machinery for h_add / h_max: atom costs are computed by a
// Dijkstra pass over the delete-free task (negative preconditions and the
// negative goal side are relaxed away). Precondition/add lists are extracted
// once per task so repeated evaluations stay cheap.
struct Relaxation {
  const GroundTask& task;
  std::vector<std::vector<int>> pre_atoms;   // per action
  std::vector<std::vector<int>> add_atoms;   // per action
  std::vector<std::vector<int>> consumers;   // atom -> actions needing it
  std::vector<int> goal_atoms;
  // scratch
  std::vector<std::uint32_t> atom_cost;
  std::vector<std::uint64_t> acc;
  std::vector<int> remaining;
  std::vector<std::uint8_t> atom_done;

  explicit Relaxation(const GroundTask& t) : task(t) {
    pre_atoms.resize(t.actions.size());
    add_atoms.resize(t.actions.size());
    consumers.resize(t.num_atoms);
    for (std::size_t ai = 0; ai < t.actions.size(); ++ai) {
      for (int a = 0; a < t.num_atoms; ++a) {
        if (t.actions[ai].pre_pos.get(a)) {
          pre_atoms[ai].push_back(a);
          consumers[a].push_back(static_cast<int>(ai));
        }
        if (t.actions[ai].add.get(a)) add_atoms[ai].push_back(a);
      }
    }
    for (int a = 0; a < t.num_atoms; ++a)
      if (t.goal_pos.get(a)) goal_atoms.push_back(a);
    atom_cost.resize(t.num_atoms);
    acc.resize(t.actions.size());
    remaining.resize(t.actions.size());
    atom_done.resize(t.num_atoms);
  }

  std::uint32_t evaluate(const BitVec& state, bool additive) {
    std::fill(atom_cost.begin(), atom_cost.end(), kInfCost);
    std::fill(acc.begin(), acc.end(), 0);
    std::fill(atom_done.begin(), atom_done.end(), 0);
    for (std::size_t ai = 0; ai < pre_atoms.size(); ++ai)
      remaining[ai] = static_cast<int>(pre_atoms[ai].size());

    using Entry = std::pair<std::uint32_t, int>;  // (cost, atom)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    for (int a = 0; a < task.num_atoms; ++a) {
      if (state.get(a)) {
        atom_cost[a] = 0;
        queue.push({0, a});
      }
    }
    // actions with no positive preconditions fire unconditionally
    for (std::size_t ai = 0; ai < pre_atoms.size(); ++ai) {
      if (!pre_atoms[ai].empty()) continue;
      for (int out : add_atoms[ai]) {
        if (atom_cost[out] > 1) {
          atom_cost[out] = 1;
          queue.push({1, out});
        }
      }
    }
    while (!queue.empty()) {
      auto [cost, atom] = queue.top();
      queue.pop();
      if (atom_done[atom]) continue;
      if (cost > atom_cost[atom]) continue;
      atom_done[atom] = 1;
      for (int ai : consumers[atom]) {
        if (additive)
          acc[ai] += atom_cost[atom];
        else
          acc[ai] = std::max<std::uint64_t>(acc[ai], atom_cost[atom]);
        if (--remaining[ai] == 0) {
          std::uint32_t achieve = static_cast<std::uint32_t>(
              std::min<std::uint64_t>(acc[ai] + 1, kInfCost));
          for (int out : add_atoms[ai]) {
            if (achieve < atom_cost[out]) {
              atom_cost[out] = achieve;
              queue.push({achieve, out});
            }
          }
        }
      }
    }
    std::uint64_t h = 0;
    for (int a : goal_atoms) {
      if (atom_cost[a] >= kInfCost) return kInfCost;
      if (additive)
        h += atom_cost[a];
      else
        h = std::max<std::uint64_t>(h, atom_cost[a]);
    }
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(h, kInfCost));
  }
};

struct Node {
  BitVec state;
  int parent = -1;
  int via_action = -1;
  std::uint32_t g = 0;
};

struct OpenEntry {
  std::uint64_t priority;
  std::uint64_t seq;
  int node;
  std::uint32_t g;  // g at push time; A* entries go stale when g improves
  bool operator>(const OpenEntry& o) const {
    return priority != o.priority ? priority > o.priority : seq > o.seq;
  }
};

// Greedy best-first uses deferred evaluation (successors inherit the parent's
// h and are re-evaluated when expanded); A* evaluates eagerly since deferral
// would break the admissible ordering.
SolveResult run_search(const GroundTask& task, const SolveBudget& budget,
                       bool greedy, bool additive) {
  SolveResult result;
  const auto t0 = std::chrono::steady_clock::now();
  auto wall_exceeded = [&]() {
    if (budget.wall_seconds <= 0.0) return false;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
               .count() > budget.wall_seconds;
  };

  Relaxation relax(task);
  std::vector<Node> nodes;
  std::unordered_map<std::uint64_t, std::vector<int>> seen;
  auto find_node = [&](const BitVec& s) {
    auto it = seen.find(s.hash());
    if (it == seen.end()) return -1;
    for (int idx : it->second)
      if (nodes[idx].state == s) return idx;
    return -1;
  };
  auto remember = [&](int idx) { seen[nodes[idx].state.hash()].push_back(idx); };

  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  std::uint64_t seq = 0;

  nodes.push_back({task.init, -1, -1, 0});
  remember(0);
  {
    std::uint32_t h0 = relax.evaluate(task.init, additive);
    if (h0 < kInfCost)
      open.push({greedy ? h0 : ((std::uint64_t(h0)) << 32 | h0), seq++, 0, 0});
  }

  bool budget_hit = false;
  while (!open.empty()) {
    if (result.expansions >= budget.max_expansions || wall_exceeded()) {
      budget_hit = true;
      break;
    }
    OpenEntry entry = open.top();
    open.pop();
    int cur = entry.node;
    if (!greedy && entry.g != nodes[cur].g) continue;  // stale after reopen
    const BitVec state = nodes[cur].state;  // copy: nodes may reallocate

    if (task.goal_satisfied(state)) {
      std::vector<int> chain;
      for (int at = cur; nodes[at].via_action >= 0; at = nodes[at].parent)
        chain.push_back(nodes[at].via_action);
      std::reverse(chain.begin(), chain.end());
      result.status = SolveStatus::Solved;
      result.action_indices = chain;
      for (int ai : chain) result.plan.push_back(task.actions[ai].spec);
      return result;
    }

    ++result.expansions;
    std::uint32_t h_here = relax.evaluate(state, additive);
    if (h_here >= kInfCost) continue;  // positive goals relaxed-unreachable

    for (std::size_t ai = 0; ai < task.actions.size(); ++ai) {
      const GroundAction& act = task.actions[ai];
      if (!task.applicable(state, act)) continue;
      BitVec next = task.apply(state, act);
      std::uint32_t g = nodes[cur].g + 1;
      int idx = find_node(next);
      if (idx >= 0) {
        if (greedy || g >= nodes[idx].g) continue;
        // shorter path to a known state: update in place and re-queue
        nodes[idx].g = g;
        nodes[idx].parent = cur;
        nodes[idx].via_action = static_cast<int>(ai);
      } else {
        nodes.push_back({std::move(next), cur, static_cast<int>(ai), g});
        idx = static_cast<int>(nodes.size()) - 1;
        remember(idx);
      }
      std::uint64_t pri;
      if (greedy) {
        pri = h_here;  // deferred: child ordered by parent's h
      } else {
        std::uint32_t h = relax.evaluate(nodes[idx].state, additive);
        if (h >= kInfCost) continue;
        pri = (std::uint64_t(g) + h) << 32 | h;
      }
      open.push({pri, seq++, idx, g});
    }
  }

  result.status = budget_hit ? SolveStatus::Exhausted : SolveStatus::Unsolvable;
  return result;
}

void self_validate(const GroundTask& task, const SolveResult& result) {
  BitVec state = task.init;
  for (int ai : result.action_indices) {
    const GroundAction& act = task.actions[ai];
    if (!task.applicable(state, act))
      throw std::logic_error("planner returned an inapplicable plan step");
    state = task.apply(state, act);
  }
  if (!task.goal_satisfied(state))
    throw std::logic_error("planner returned a plan that misses the goal");
}

}  // namespace

SolveResult solve(const GroundTask& task, const SolveBudget& budget,
                  SearchMode mode) {
  SolveResult result;
  switch (mode) {
    case SearchMode::Greedy:
      result = run_search(task, budget, true, true);
      break;
    case SearchMode::AStarOptimal:
      result = run_search(task, budget, false, false);
      break;
    case SearchMode::GreedyThenAStar: {
      result = run_search(task, budget, true, true);
      if (result.status == SolveStatus::Exhausted)
        result = run_search(task, budget, false, false);
      break;
    }
  }
  if (result.status == SolveStatus::Solved) self_validate(task, result);
  return result;
}

// --- emission ----------------------------------------------------------------

namespace {

std::string lit_text(const LiteralVocabulary& vocab, int idx,
                     const Encoder& enc) {
  const int pred = vocab.predicate(idx);
  const int variant = vocab.arg_variant(idx);
  if (vocab.is_unary(idx))
    return "(" + enc.unary_name(pred) + (variant == 0 ? " ?x" : " ?y") + ")";
  return "(" + enc.relational_name(pred - vocab.d_z) +
         (variant == 0 ? " ?x ?y" : " ?y ?x") + ")";
}

std::string effect_branch_text(const LiteralVocabulary& vocab,
                               const EffectBranch& b, const Encoder& enc) {
  std::string out = "(and";
  for (int i = 0; i < vocab.size(); ++i) {
    std::uint32_t bit = 1u << i;
    if (b.add_bits & bit) out += " " + lit_text(vocab, i, enc);
    if (b.del_bits & bit) out += " (not " + lit_text(vocab, i, enc) + ")";
  }
  out += ")";
  return out;
}

void emit_domain_header(std::ostringstream& out, const std::string& name,
                        const Encoder& enc, bool probabilistic) {
  out << "(define (domain " << name << ")\n";
  out << "  (:requirements :strips :typing :negative-preconditions";
  if (probabilistic) out << " :probabilistic-effects";
  out << ")\n";
  out << "  (:types obj)\n";
  out << "  (:predicates\n";
  for (int d = 0; d < enc.unary_arity(); ++d)
    out << "    (" << enc.unary_name(d) << " ?x - obj)\n";
  for (int k = 0; k < enc.relational_heads(); ++k)
    out << "    (" << enc.relational_name(k) << " ?x - obj ?y - obj)\n";
  out << "  )\n";
}

void emit_action_open(std::ostringstream& out, const Operator& op,
                      const LiteralVocabulary& vocab, const Encoder& enc) {
  out << "  (:action " << op.name << "\n";
  out << "    :parameters (?x - obj"
      << (op.pattern == ParamPattern::Pair ? " ?y - obj" : "") << ")\n";
  out << "    :precondition (and";
  for (int i = 0; i < vocab.size(); ++i) {
    if (op.pre_bits & (1u << i))
      out << " " << lit_text(vocab, i, enc);
    else
      out << " (not " << lit_text(vocab, i, enc) << ")";
  }
  out << ")\n";
}

}  // namespace

std::string emit_pddl(const std::vector<Operator>& domain, const Encoder& enc,
                      const std::string& domain_name) {
  std::ostringstream out;
  emit_domain_header(out, domain_name, enc, false);
  for (const auto& op : domain) {
    if (!op.deterministic())
      throw std::invalid_argument("emit_pddl: operator '" + op.name +
                                  "' is probabilistic");
    LiteralVocabulary vocab =
        op.vocab(enc.unary_arity(), enc.relational_heads());
    emit_action_open(out, op, vocab, enc);
    out << "    :effect " << effect_branch_text(vocab, op.branches.front(), enc)
        << "\n  )\n";
  }
  out << ")\n";
  return out.str();
}

std::string emit_ppddl(const std::vector<Operator>& ops, const Encoder& enc,
                       const std::string& domain_name) {
  std::ostringstream out;
  emit_domain_header(out, domain_name, enc, true);
  for (const auto& op : ops) {
    LiteralVocabulary vocab =
        op.vocab(enc.unary_arity(), enc.relational_heads());
    emit_action_open(out, op, vocab, enc);
    if (op.deterministic()) {
      out << "    :effect "
          << effect_branch_text(vocab, op.branches.front(), enc) << "\n  )\n";
    } else {
      out << "    :effect (probabilistic";
      for (const auto& b : op.branches) {
        char prob[32];
        std::snprintf(prob, sizeof(prob), "%.6f", b.probability);
        out << "\n      " << prob << " " << effect_branch_text(vocab, b, enc);
      }
      out << ")\n  )\n";
    }
  }
  out << ")\n";
  return out.str();
}

std::string emit_problem(int num_objects, const SymbolicState& init,
                         const SymbolicState& goal, const Encoder& enc,
                         const GoalConvention& convention,
                         const std::string& problem_name,
                         const std::string& domain_name) {
  std::ostringstream out;
  out << "(define (problem " << problem_name << ")\n";
  out << "  (:domain " << domain_name << ")\n";
  out << "  (:objects";
  for (int i = 0; i < num_objects; ++i) out << " " << object_name(i);
  out << " - obj)\n";
  out << "  (:init\n";
  for (int i = 0; i < num_objects; ++i)
    for (int d = 0; d < init.d_z; ++d)
      if (init.u(i, d))
        out << "    (" << enc.unary_name(d) << " " << object_name(i) << ")\n";
  for (int k = 0; k < init.K; ++k)
    for (int i = 0; i < num_objects; ++i)
      for (int j = 0; j < num_objects; ++j)
        if (init.r(k, i, j))
          out << "    (" << enc.relational_name(k) << " " << object_name(i)
              << " " << object_name(j) << ")\n";
  out << "  )\n";
  out << "  (:goal (and\n";
  for (int i = 0; i < num_objects; ++i)
    for (int d = 0; d < goal.d_z; ++d)
      if (goal.u(i, d))
        out << "    (" << enc.unary_name(d) << " " << object_name(i) << ")\n";
  for (int k = 0; k < goal.K; ++k) {
    bool negative_head =
        std::find(convention.negative_goal_heads.begin(),
                  convention.negative_goal_heads.end(),
                  k) != convention.negative_goal_heads.end();
    for (int i = 0; i < num_objects; ++i)
      for (int j = 0; j < num_objects; ++j) {
        if (goal.r(k, i, j))
          out << "    (" << enc.relational_name(k) << " " << object_name(i)
              << " " << object_name(j) << ")\n";
        else if (negative_head && i != j)
          out << "    (not (" << enc.relational_name(k) << " "
              << object_name(i) << " " << object_name(j) << "))\n";
      }
  }
  out << "  ))\n)\n";
  return out.str();
}

// --- s-expression reader ------------------------------------------------------

namespace {

struct Sexp {
  std::string atom;  // empty when this is a list
  std::vector<Sexp> items;
  bool is_atom() const { return items.empty() && !atom.empty(); }
};

struct SexpParser {
  const std::string& text;
  std::size_t pos = 0;

  explicit SexpParser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size()) {
      if (std::isspace(static_cast<unsigned char>(text[pos]))) {
        ++pos;
      } else if (text[pos] == ';') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  Sexp parse() {
    skip_ws();
    if (pos >= text.size()) throw std::runtime_error("unexpected end of PDDL");
    if (text[pos] == '(') {
      ++pos;
      Sexp list;
      list.atom.clear();
      while (true) {
        skip_ws();
        if (pos >= text.size())
          throw std::runtime_error("unbalanced parenthesis in PDDL");
        if (text[pos] == ')') {
          ++pos;
          return list;
        }
        list.items.push_back(parse());
      }
    }
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != '(' && text[pos] != ')' &&
           !std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
    Sexp atom;
    atom.atom = text.substr(start, pos - start);
    return atom;
  }
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

// resolve "(pred ?x [?y])" against the vocabulary; returns the literal index
int literal_index(const Sexp& lit, const LiteralVocabulary& vocab,
                  const Encoder& enc) {
  if (lit.items.empty() || !lit.items[0].is_atom())
    throw std::runtime_error("bad literal in PDDL");
  const std::string pred = lit.items[0].atom;
  std::vector<std::string> args;
  for (std::size_t i = 1; i < lit.items.size(); ++i)
    args.push_back(lit.items[i].atom);
  for (int idx = 0; idx < vocab.size(); ++idx) {
    const int p = vocab.predicate(idx);
    const int variant = vocab.arg_variant(idx);
    if (vocab.is_unary(idx)) {
      if (args.size() != 1 || enc.unary_name(p) != pred) continue;
      if (args[0] == (variant == 0 ? "?x" : "?y")) return idx;
    } else {
      if (args.size() != 2 || enc.relational_name(p - vocab.d_z) != pred)
        continue;
      if (variant == 0 && args[0] == "?x" && args[1] == "?y") return idx;
      if (variant == 1 && args[0] == "?y" && args[1] == "?x") return idx;
    }
  }
  throw std::runtime_error("unknown literal in PDDL: (" + pred + " ...)");
}

int offsets_from_name(const std::string& name, int& di, int& dj) {
  // pick-place_d{i}_d{j}[_suffix...]
  std::vector<std::string> parts;
  std::istringstream ss(name);
  std::string part;
  while (std::getline(ss, part, '_')) parts.push_back(part);
  if (parts.size() < 3) return -1;
  auto parse_tok = [](const std::string& tok, int& out) {
    if (tok.size() >= 2 && tok[0] == 'd' && tok[1] == 'm') {
      out = -std::stoi(tok.substr(2));
      return true;
    }
    if (tok.size() >= 2 && tok[0] == 'd' &&
        std::isdigit(static_cast<unsigned char>(tok[1]))) {
      out = std::stoi(tok.substr(1));
      return true;
    }
    return false;
  };
  if (!parse_tok(parts[1], di) || !parse_tok(parts[2], dj)) return -1;
  if (di < -1 || di > 1 || dj < -1 || dj > 1) return -1;
  return 0;
}

}  // namespace

std::vector<Operator> parse_pddl_domain(const std::string& text,
                                        const Encoder& enc) {
  SexpParser parser(text);
  Sexp root = parser.parse();
  if (root.items.empty() || lower(root.items[0].atom) != "define")
    throw std::runtime_error("not a PDDL define form");

  std::vector<Operator> ops;
  for (std::size_t i = 1; i < root.items.size(); ++i) {
    const Sexp& form = root.items[i];
    if (form.items.empty() || lower(form.items[0].atom) != ":action") continue;
    Operator op;
    op.name = form.items[1].atom;
    if (offsets_from_name(op.name, op.pick_offset, op.place_offset) != 0)
      throw std::runtime_error("action name does not encode offsets: " +
                               op.name);
    // locate sections
    const Sexp* params = nullptr;
    const Sexp* precond = nullptr;
    const Sexp* effect = nullptr;
    for (std::size_t j = 2; j + 1 < form.items.size(); j += 2) {
      const std::string key = lower(form.items[j].atom);
      if (key == ":parameters") params = &form.items[j + 1];
      if (key == ":precondition") precond = &form.items[j + 1];
      if (key == ":effect") effect = &form.items[j + 1];
    }
    if (!params || !precond || !effect)
      throw std::runtime_error("incomplete action: " + op.name);
    int var_count = 0;
    for (const auto& item : params->items)
      if (item.is_atom() && item.atom.size() && item.atom[0] == '?')
        ++var_count;
    op.pattern = var_count >= 2 ? ParamPattern::Pair : ParamPattern::Self;
    LiteralVocabulary vocab{enc.unary_arity(), enc.relational_heads(),
                            op.pattern};

    auto literal_list = [&](const Sexp& tree) {
      std::vector<const Sexp*> lits;
      if (!tree.items.empty() && tree.items[0].is_atom() &&
          lower(tree.items[0].atom) == "and") {
        for (std::size_t j = 1; j < tree.items.size(); ++j)
          lits.push_back(&tree.items[j]);
      } else if (!tree.items.empty()) {
        lits.push_back(&tree);
      }
      return lits;
    };

    op.pre_bits = 0;
    for (const Sexp* lit : literal_list(*precond)) {
      bool positive = true;
      const Sexp* body = lit;
      if (!lit->items.empty() && lit->items[0].is_atom() &&
          lower(lit->items[0].atom) == "not") {
        positive = false;
        body = &lit->items[1];
      }
      int idx = literal_index(*body, vocab, enc);
      if (positive) op.pre_bits |= 1u << idx;
    }

    EffectBranch branch;
    branch.probability = 1.0;
    for (const Sexp* lit : literal_list(*effect)) {
      bool positive = true;
      const Sexp* body = lit;
      if (!lit->items.empty() && lit->items[0].is_atom() &&
          lower(lit->items[0].atom) == "not") {
        positive = false;
        body = &lit->items[1];
      }
      int idx = literal_index(*body, vocab, enc);
      if (positive)
        branch.add_bits |= 1u << idx;
      else
        branch.del_bits |= 1u << idx;
    }
    op.branches.push_back(branch);
    ops.push_back(std::move(op));
  }
  return ops;
}

// --- plan files ---------------------------------------------------------------

std::string plan_to_text(const std::vector<ActionSpec>& plan) {
  std::ostringstream out;
  auto offtok = [](int d) {
    return d < 0 ? "dm" + std::to_string(-d) : "d" + std::to_string(d);
  };
  for (const auto& a : plan) {
    out << "(pick-place_" << offtok(a.pick_offset) << "_"
        << offtok(a.place_offset) << " " << object_name(a.pick_index);
    if (a.place_index != a.pick_index)
      out << " " << object_name(a.place_index);
    out << ")\n";
  }
  return out.str();
}

std::vector<ActionSpec> parse_plan(const std::string& text) {
  std::vector<ActionSpec> plan;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped;
    for (char c : line) {
      if (c == ';') break;
      stripped += c;
    }
    auto b = stripped.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = stripped.find_last_not_of(" \t\r");
    stripped = stripped.substr(b, e - b + 1);
    if (stripped.front() != '(' || stripped.back() != ')')
      throw PlanParseError(lineno, "expected (action ...) s-expression");
    std::istringstream ls(stripped.substr(1, stripped.size() - 2));
    std::string name, a1, a2;
    ls >> name >> a1;
    ls >> a2;
    ActionSpec spec;
    if (offsets_from_name(name, spec.pick_offset, spec.place_offset) != 0)
      throw PlanParseError(lineno, "action name does not encode offsets: " +
                                       name);
    auto parse_obj = [&](const std::string& tok) {
      if (tok.size() < 2 || tok[0] != 'o')
        throw PlanParseError(lineno, "bad object token: " + tok);
      return std::stoi(tok.substr(1));
    };
    if (a1.empty()) throw PlanParseError(lineno, "action missing arguments");
    spec.pick_index = parse_obj(a1);
    spec.place_index = a2.empty() ? spec.pick_index : parse_obj(a2);
    plan.push_back(spec);
  }
  return plan;
}

// --- external planner adapter --------------------------------------------------

std::optional<std::vector<ActionSpec>> solve_with_external_planner(
    const std::vector<Operator>& domain, int num_objects,
    const SymbolicState& init, const SymbolicState& goal, const Encoder& enc,
    const std::string& command, const GoalConvention& convention) {
  namespace fs = std::filesystem;
  fs::path dir =
      fs::temp_directory_path() /
      ("bilevel-ext-" + std::to_string(
                            std::chrono::steady_clock::now().time_since_epoch()
                                .count()));
  fs::create_directories(dir);
  fs::path domain_file = dir / "domain.pddl";
  fs::path problem_file = dir / "problem.pddl";
  fs::path plan_file = dir / "plan.txt";
  {
    std::ofstream d(domain_file);
    d << emit_pddl(domain, enc);
    std::ofstream p(problem_file);
    p << emit_problem(num_objects, init, goal, enc, convention);
  }
  std::string cmd = command;
  auto substitute = [&](const std::string& key, const std::string& value) {
    for (std::size_t at = cmd.find(key); at != std::string::npos;
         at = cmd.find(key))
      cmd.replace(at, key.size(), value);
  };
  substitute("{domain}", domain_file.string());
  substitute("{problem}", problem_file.string());
  substitute("{plan}", plan_file.string());
  int rc = std::system(cmd.c_str());
  std::optional<std::vector<ActionSpec>> result;
  if (rc == 0 && fs::exists(plan_file)) {
    std::ifstream f(plan_file);
    std::stringstream ss;
    ss << f.rdbuf();
    result = parse_plan(ss.str());
  }
  fs::remove_all(dir);
  return result;
}

}  // namespace bilevel
