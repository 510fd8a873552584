#include "bilevel/world.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bilevel/parallel.hpp"
#include "json.hpp"

namespace bilevel {

double footprint_overlap_area(const ObjectFeature& a, const ObjectFeature& b,
                              const PhysicsConfig& cfg) {
  double ha = a.half(cfg), hb = b.half(cfg);
  double ox = std::min(a.position.x + ha, b.position.x + hb) -
              std::max(a.position.x - ha, b.position.x - hb);
  double oy = std::min(a.position.y + ha, b.position.y + hb) -
              std::max(a.position.y - ha, b.position.y - hb);
  if (ox <= 0.0 || oy <= 0.0) return 0.0;
  return ox * oy;
}

bool rests_on(const ObjectFeature& above, const ObjectFeature& below,
              const PhysicsConfig& cfg) {
  if (std::abs(above.bottom(cfg) - below.top(cfg)) > cfg.stack_z_tol)
    return false;
  return footprint_overlap_area(above, below, cfg) > 1e-12;
}

std::optional<int> supporter_of(const ContinuousState& state, int i,
                                const PhysicsConfig& cfg) {
  for (int j = 0; j < state.size(); ++j) {
    if (j == i) continue;
    if (rests_on(state.objects[i], state.objects[j], cfg)) return j;
  }
  return std::nullopt;
}

bool is_topmost(const ContinuousState& state, int i, const PhysicsConfig& cfg) {
  for (int j = 0; j < state.size(); ++j) {
    if (j == i) continue;
    if (rests_on(state.objects[j], state.objects[i], cfg)) return false;
  }
  return true;
}

int stack_base(const ContinuousState& state, int i, const PhysicsConfig& cfg) {
  int cur = i;
  for (int guard = 0; guard < state.size(); ++guard) {
    auto below = supporter_of(state, cur, cfg);
    if (!below) return cur;
    cur = *below;
  }
  return cur;
}

bool boxes_intersect(const ObjectFeature& a, const ObjectFeature& b,
                     const PhysicsConfig& cfg, double tol) {
  double ha = a.half(cfg), hb = b.half(cfg);
  return std::abs(a.position.x - b.position.x) < ha + hb - tol &&
         std::abs(a.position.y - b.position.y) < ha + hb - tol &&
         std::abs(a.position.z - b.position.z) < ha + hb - tol;
}

namespace {

bool intersects_any(const ContinuousState& state, const ObjectFeature& probe,
                    int exclude, const PhysicsConfig& cfg) {
  for (int j = 0; j < state.size(); ++j) {
    if (j == exclude) continue;
    if (boxes_intersect(probe, state.objects[j], cfg)) return true;
  }
  return false;
}

bool inside_table(double x, double y, double half, const PhysicsConfig& cfg) {
  return x >= half && x <= cfg.table_size - half && y >= half &&
         y <= cfg.table_size - half;
}

// Deterministic landing spot for a block that failed to stick: walk outward
// from `origin` along +x, -x, +y, -y in 1 cm rings until a clear on-table
// pose is found.
Vec3 find_free_table_spot(const ContinuousState& state, int moving,
                          const Vec3& origin, double origin_half,
                          const PhysicsConfig& cfg) {
  double half = state.objects[moving].half(cfg);
  double r0 = origin_half + half + cfg.clearance;
  for (double r = r0; r < 2.0 * cfg.table_size; r += 0.01) {
    const double cand[4][2] = {{origin.x + r, origin.y},
                               {origin.x - r, origin.y},
                               {origin.x, origin.y + r},
                               {origin.x, origin.y - r}};
    for (const auto& c : cand) {
      double x = c[0], y = c[1];
      if (!inside_table(x, y, half, cfg)) continue;
      ObjectFeature probe = state.objects[moving];
      probe.position = {x, y, half};
      // the moving block must clear everything with a margin
      bool clear = true;
      for (int j = 0; j < state.size() && clear; ++j) {
        if (j == moving) continue;
        double hj = state.objects[j].half(cfg);
        double need = half + hj + 0.5 * cfg.clearance;
        bool sep = std::abs(x - state.objects[j].position.x) >= need ||
                   std::abs(y - state.objects[j].position.y) >= need ||
                   std::abs(half - state.objects[j].position.z) >= half + hj;
        clear = sep;
      }
      if (clear) return probe.position;
    }
  }
  throw std::runtime_error("no free table spot found");
}

}  // namespace

ContinuousState step(const ContinuousState& state, const ActionSpec& action,
                     const PhysicsConfig& cfg, Rng& rng) {
  if (!action.valid_for(state.size()))
    throw std::invalid_argument("action indices out of range");

  const int p = action.pick_index;
  const int t = action.place_index;
  const ObjectFeature& picked = state.objects[p];

  // grasp rules: object must be topmost and the grasp offset within its body
  if (!is_topmost(state, p, cfg)) return state;
  double grasp_shift = action.pick_offset * cfg.offset_unit;
  if (std::abs(grasp_shift) > picked.half(cfg) + 1e-12) return state;

  // release point: over the target object, shifted by the net offset
  double lx = state.objects[t].position.x +
              (action.place_offset - action.pick_offset) * cfg.offset_unit;
  double ly = state.objects[t].position.y;
  if (cfg.noise_sigma > 0.0) {
    lx += rng.normal(0.0, cfg.noise_sigma);
    ly += rng.normal(0.0, cfg.noise_sigma);
  }

  // highest block under the landing footprint (picked object excluded)
  double ph = picked.half(cfg);
  int support = -1;
  double support_top = 0.0;
  for (int j = 0; j < state.size(); ++j) {
    if (j == p) continue;
    ObjectFeature probe = picked;
    probe.position = {lx, ly, 0.0};
    if (footprint_overlap_area(probe, state.objects[j], cfg) <= 1e-12) continue;
    double top = state.objects[j].top(cfg);
    if (support < 0 || top > support_top) {
      support = j;
      support_top = top;
    }
  }

  ContinuousState next = state;
  if (support < 0) {
    // bare table landing
    if (inside_table(lx, ly, ph, cfg)) {
      next.objects[p].position = {lx, ly, ph};
    } else {
      Vec3 origin{std::clamp(lx, ph, cfg.table_size - ph),
                  std::clamp(ly, ph, cfg.table_size - ph), 0.0};
      next.objects[p].position =
          find_free_table_spot(state, p, origin, 0.0, cfg);
    }
    return next;
  }

  const ObjectFeature& sup = state.objects[support];
  ObjectFeature placed = picked;
  placed.position = {lx, ly, support_top + ph};

  bool stable = true;
  if (picked.is_large && !sup.is_large) {
    stable = false;  // large on small always topples
  } else {
    double frac = footprint_overlap_area(placed, sup, cfg) /
                  (picked.edge(cfg) * picked.edge(cfg));
    if (frac + 1e-12 < cfg.support_frac) stable = false;
  }
  if (stable && intersects_any(state, placed, p, cfg)) stable = false;
  if (stable && !inside_table(lx, ly, ph, cfg)) {
    // keep the center over the table even when stacked near the edge
    stable = inside_table(lx, ly, 0.0, cfg);
  }

  if (stable) {
    next.objects[p].position = placed.position;
  } else {
    int base = stack_base(state, support, cfg);
    next.objects[p].position = find_free_table_spot(
        state, p, state.objects[base].position,
        state.objects[base].half(cfg), cfg);
  }
  return next;
}

ContinuousState step_noise_free(const ContinuousState& state,
                                const ActionSpec& action,
                                const PhysicsConfig& cfg) {
  PhysicsConfig quiet = cfg;
  quiet.noise_sigma = 0.0;
  Rng unused(0);
  return step(state, action, quiet, unused);
}

std::vector<ActionSpec> legal_actions(int n) {
  std::vector<ActionSpec> out;
  out.reserve(static_cast<std::size_t>(9) * n * n);
  for (int p = 0; p < n; ++p)
    for (int t = 0; t < n; ++t)
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) out.push_back({p, di, t, dj});
  return out;
}

std::vector<ActionSpec> legal_actions(const ContinuousState& state) {
  return legal_actions(state.size());
}

bool is_success(const ContinuousState& final_state,
                const ContinuousState& goal, double epsilon,
                SuccessMetric metric) {
  if (final_state.size() != goal.size())
    throw std::invalid_argument("state/goal size mismatch");
  if (metric == SuccessMetric::WholeState) {
    double sq = 0.0;
    for (int i = 0; i < goal.size(); ++i) {
      Vec3 d = final_state.pos(i) - goal.pos(i);
      sq += d.x * d.x + d.y * d.y + d.z * d.z;
    }
    return std::sqrt(sq) < epsilon;
  }
  for (int i = 0; i < goal.size(); ++i) {
    if ((final_state.pos(i) - goal.pos(i)).norm() >= epsilon) return false;
  }
  return true;
}

namespace {

ContinuousState sample_initial_scene(int n, Rng& rng,
                                     const PhysicsConfig& phys, double margin,
                                     double min_gap, int max_attempts) {
  ContinuousState scene;
  scene.objects.resize(n);
  for (int i = 0; i < n; ++i) {
    scene.objects[i].is_large = rng.coin();
  }
  for (int i = 0; i < n; ++i) {
    double half = scene.objects[i].half(phys);
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      double x = rng.uniform(margin, phys.table_size - margin);
      double y = rng.uniform(margin, phys.table_size - margin);
      bool ok = true;
      for (int j = 0; j < i && ok; ++j) {
        double need =
            half + scene.objects[j].half(phys) + min_gap;
        ok = std::abs(x - scene.objects[j].position.x) >= need ||
             std::abs(y - scene.objects[j].position.y) >= need;
      }
      if (ok) {
        scene.objects[i].position = {x, y, half};
        placed = true;
      }
    }
    if (!placed) throw std::runtime_error("initial scene sampling failed");
  }
  return scene;
}

double max_displacement(const ContinuousState& a, const ContinuousState& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i)
    m = std::max(m, (a.pos(i) - b.pos(i)).norm());
  return m;
}

}  // namespace

std::vector<Transition> collect_dataset(const CollectConfig& cfg) {
  if (cfg.num_samples == 0)
    throw std::invalid_argument("collect: num_samples must be > 0");
  if (cfg.n_range.empty())
    throw std::invalid_argument("collect: empty n_range");
  if (cfg.episode_length <= 0)
    throw std::invalid_argument("collect: episode_length must be > 0");

  const std::uint64_t L = static_cast<std::uint64_t>(cfg.episode_length);
  const std::uint64_t episodes = (cfg.num_samples + L - 1) / L;
  std::vector<std::vector<Transition>> chunks(episodes);

  parallel_for(episodes, cfg.jobs, [&](std::size_t e) {
    Rng rng = derive_rng(cfg.seed, "episode/" + std::to_string(e));
    int n = cfg.n_range[rng.below(cfg.n_range.size())];
    ContinuousState state =
        sample_initial_scene(n, rng, cfg.physics, 0.12, 0.01, 1000);
    auto actions = legal_actions(n);
    std::vector<Transition>& out = chunks[e];
    out.reserve(cfg.episode_length);
    for (int s = 0; s < cfg.episode_length; ++s) {
      ActionSpec a = actions[rng.below(actions.size())];
      ContinuousState post = step(state, a, cfg.physics, rng);
      Transition tr;
      tr.pre = state;
      tr.action = a;
      tr.post = post;
      tr.effect.resize(n);
      for (int i = 0; i < n; ++i) tr.effect[i] = post.pos(i) - state.pos(i);
      out.push_back(std::move(tr));
      state = post;
    }
  });

  std::vector<Transition> data;
  data.reserve(episodes * L);
  for (auto& c : chunks)
    for (auto& tr : c) data.push_back(std::move(tr));
  data.resize(cfg.num_samples);
  return data;
}

Problem generate_problem(int n, int k, std::uint64_t seed,
                         const ProblemGenConfig& cfg) {
  if (n < 2) throw std::invalid_argument("generate_problem: n must be >= 2");
  if (k < 1) throw std::invalid_argument("generate_problem: k must be >= 1");
  Rng rng = derive_rng(seed, "problem");
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    ContinuousState init = sample_initial_scene(
        n, rng, cfg.physics, cfg.margin, cfg.min_gap, cfg.max_attempts);
    ContinuousState cur = init;
    auto actions = legal_actions(n);
    bool ok = true;
    for (int step_i = 0; step_i < k && ok; ++step_i) {
      bool moved = false;
      for (int redraw = 0; redraw < cfg.max_attempts && !moved; ++redraw) {
        ActionSpec a = actions[rng.below(actions.size())];
        ContinuousState post = step(cur, a, cfg.physics, rng);
        if (max_displacement(post, cur) > cfg.min_action_move) {
          cur = post;
          moved = true;
        }
      }
      ok = moved;
    }
    if (!ok) continue;
    if (max_displacement(cur, init) <= cfg.epsilon) continue;
    Problem p;
    p.init = std::move(init);
    p.goal = std::move(cur);
    p.epsilon = cfg.epsilon;
    p.n = n;
    p.k = k;
    p.seed = seed;
    return p;
  }
  throw std::runtime_error(
      "generate_problem: rejection bound exhausted (degenerate configuration)");
}

// --- serialization ----------------------------------------------------------

namespace {

using nlohmann::json;

json state_to_json(const ContinuousState& s) {
  json pos = json::array();
  json large = json::array();
  for (const auto& o : s.objects) {
    pos.push_back({o.position.x, o.position.y, o.position.z});
    large.push_back(o.is_large ? 1 : 0);
  }
  return json{{"pos", pos}, {"large", large}};
}

ContinuousState state_from_json(const json& j) {
  ContinuousState s;
  const auto& pos = j.at("pos");
  const auto& large = j.at("large");
  for (std::size_t i = 0; i < pos.size(); ++i) {
    ObjectFeature o;
    o.position = {pos[i][0].get<double>(), pos[i][1].get<double>(),
                  pos[i][2].get<double>()};
    o.is_large = large[i].get<int>() != 0;
    s.objects.push_back(o);
  }
  return s;
}

json flat_state(const ContinuousState& s) {
  json a = json::array();
  for (const auto& o : s.objects) {
    a.push_back(o.position.x);
    a.push_back(o.position.y);
    a.push_back(o.position.z);
    auto onehot = o.type_onehot();
    a.push_back(onehot[0]);
    a.push_back(onehot[1]);
  }
  return a;
}

ContinuousState unflatten_state(const json& a) {
  ContinuousState s;
  for (std::size_t i = 0; i + 4 < a.size(); i += 5) {
    ObjectFeature o;
    o.position = {a[i].get<double>(), a[i + 1].get<double>(),
                  a[i + 2].get<double>()};
    o.is_large = a[i + 3].get<double>() > 0.5;
    s.objects.push_back(o);
  }
  return s;
}

}  // namespace

void write_transitions(std::ostream& out, const std::vector<Transition>& data,
                       const CollectConfig& cfg) {
  json header{
      {"schema", 1},
      {"kind", "transitions"},
      {"n_range", cfg.n_range},
      {"seed", cfg.seed},
      {"episode_length", cfg.episode_length},
      {"physics",
       {{"large_edge", cfg.physics.large_edge},
        {"small_edge", cfg.physics.small_edge},
        {"table_size", cfg.physics.table_size},
        {"offset_unit", cfg.physics.offset_unit},
        {"support_frac", cfg.physics.support_frac},
        {"noise_sigma", cfg.physics.noise_sigma}}},
      {"symbolic_bits", "unary row-major (object major, predicate minor), "
                        "then relational head-major (head, row, column)"}};
  out << header.dump() << "\n";
  for (const auto& tr : data) {
    json rec{{"pre", flat_state(tr.pre)},
             {"action",
              {tr.action.pick_index, tr.action.pick_offset,
               tr.action.place_index, tr.action.place_offset}},
             {"post", flat_state(tr.post)}};
    json eff = json::array();
    for (const auto& e : tr.effect) {
      eff.push_back(e.x);
      eff.push_back(e.y);
      eff.push_back(e.z);
    }
    rec["effect"] = eff;
    out << rec.dump() << "\n";
  }
}

void write_transitions_file(const std::string& path,
                            const std::vector<Transition>& data,
                            const CollectConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  write_transitions(f, data, cfg);
}

std::vector<Transition> read_transitions(std::istream& in) {
  std::vector<Transition> data;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line);
    if (!header_seen) {
      header_seen = true;
      if (j.contains("kind") && j["kind"] != "transitions")
        throw std::runtime_error("not a transitions file");
      if (j.contains("kind")) continue;  // header line
    }
    Transition tr;
    tr.pre = unflatten_state(j.at("pre"));
    tr.post = unflatten_state(j.at("post"));
    const auto& a = j.at("action");
    tr.action = {a[0].get<int>(), a[1].get<int>(), a[2].get<int>(),
                 a[3].get<int>()};
    const auto& eff = j.at("effect");
    for (std::size_t i = 0; i + 2 < eff.size(); i += 3)
      tr.effect.push_back({eff[i].get<double>(), eff[i + 1].get<double>(),
                           eff[i + 2].get<double>()});
    data.push_back(std::move(tr));
  }
  return data;
}

std::vector<Transition> read_transitions_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return read_transitions(f);
}

std::string problem_to_json(const Problem& p) {
  json j{{"schema", 1},
         {"kind", "problem"},
         {"n", p.n},
         {"k", p.k},
         {"seed", p.seed},
         {"epsilon", p.epsilon},
         {"init", state_to_json(p.init)},
         {"goal", state_to_json(p.goal)}};
  return j.dump(2);
}

Problem problem_from_json(const std::string& text) {
  json j = json::parse(text);
  Problem p;
  p.n = j.at("n").get<int>();
  p.k = j.at("k").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.epsilon = j.at("epsilon").get<double>();
  p.init = state_from_json(j.at("init"));
  p.goal = state_from_json(j.at("goal"));
  return p;
}

void write_problem_file(const std::string& path, const Problem& p) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << problem_to_json(p) << "\n";
}

Problem read_problem_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return problem_from_json(ss.str());
}

}  // namespace bilevel
