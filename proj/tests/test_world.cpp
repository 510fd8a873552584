#include <sstream>

#include "bilevel/world.hpp"
#include "doctest.h"

using namespace bilevel;

namespace {

PhysicsConfig quiet_physics() { return PhysicsConfig{}; }

// two blocks on the table, 30 cm apart
ContinuousState two_blocks(bool first_large, bool second_large,
                           const PhysicsConfig& cfg) {
  ContinuousState s;
  ObjectFeature a, b;
  a.is_large = first_large;
  a.position = {0.3, 0.5, a.half(cfg)};
  b.is_large = second_large;
  b.position = {0.6, 0.5, b.half(cfg)};
  s.objects = {a, b};
  return s;
}

bool support_invariant_holds(const ContinuousState& s,
                             const PhysicsConfig& cfg) {
  for (int i = 0; i < s.size(); ++i) {
    const ObjectFeature& o = s.objects[i];
    if (std::abs(o.position.z - o.half(cfg)) < 1e-9) continue;  // on table
    auto sup = supporter_of(s, i, cfg);
    if (!sup) return false;
    double overlap = footprint_overlap_area(o, s.objects[*sup], cfg);
    double own = o.edge(cfg) * o.edge(cfg);
    if (overlap + 1e-12 < cfg.support_frac * own) return false;
  }
  return true;
}

bool no_interpenetration(const ContinuousState& s, const PhysicsConfig& cfg) {
  for (int i = 0; i < s.size(); ++i)
    for (int j = i + 1; j < s.size(); ++j)
      if (boxes_intersect(s.objects[i], s.objects[j], cfg, 1e-3)) return false;
  return true;
}

}  // namespace

TEST_SUITE("world") {

TEST_CASE("stacking a small block on a clear large block") {
  PhysicsConfig cfg = quiet_physics();
  ContinuousState s = two_blocks(false, true, cfg);  // small at 0, large at 1
  ContinuousState post = step_noise_free(s, {0, 0, 1, 0}, cfg);
  // exact stacking geometry: z = large top + small half
  CHECK(post.pos(0).x == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(post.pos(0).y == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(post.pos(0).z ==
        doctest::Approx(s.pos(1).z + (0.06 + 0.03) / 2).epsilon(1e-12));
  CHECK(post.pos(1) == s.pos(1));
}

TEST_CASE("large on small topples to the table") {
  PhysicsConfig cfg = quiet_physics();
  ContinuousState s = two_blocks(true, false, cfg);  // large at 0, small at 1
  ContinuousState post = step_noise_free(s, {0, 0, 1, 0}, cfg);
  // stability predicate: the large block must sit on the table, clear of the
  // stack, not on the small block
  CHECK(post.pos(0).z == doctest::Approx(0.03).epsilon(1e-12));
  CHECK_FALSE(rests_on(post.objects[0], post.objects[1], cfg));
  CHECK(support_invariant_holds(post, cfg));
  CHECK(no_interpenetration(post, cfg));
}

TEST_CASE("occluded grasp is a no-op") {
  PhysicsConfig cfg = quiet_physics();
  ContinuousState s = two_blocks(false, true, cfg);
  ContinuousState stacked = step_noise_free(s, {0, 0, 1, 0}, cfg);
  // the large block now carries the small one; grasping it must do nothing
  ContinuousState post = step_noise_free(stacked, {1, 0, 0, 0}, cfg);
  CHECK(post == stacked);
}

TEST_CASE("out-of-reach offset on a small block is a no-op") {
  PhysicsConfig cfg = quiet_physics();
  ContinuousState s = two_blocks(false, true, cfg);
  // |delta * 2 cm| = 2 cm > 1.5 cm half-width of a small block
  ContinuousState post = step_noise_free(s, {0, 1, 1, 0}, cfg);
  CHECK(post == s);
}

TEST_CASE("legal action counts are 9n^2") {
  CHECK(legal_actions(2).size() == 36);
  CHECK(legal_actions(4).size() == 144);
  CHECK(legal_actions(1).size() == 9);
  for (int n = 1; n <= 6; ++n)
    CHECK(legal_actions(n).size() == static_cast<std::size_t>(9) * n * n);
}

TEST_CASE("is_success thresholds") {
  PhysicsConfig cfg = quiet_physics();
  ContinuousState goal = two_blocks(false, true, cfg);
  CHECK(is_success(goal, goal, 0.05));

  ContinuousState displaced = goal;
  displaced.objects[0].position.x += 0.05;  // exactly 5 cm
  CHECK_FALSE(is_success(displaced, goal, 0.05));  // strict inequality

  ContinuousState pythagorean = goal;
  pythagorean.objects[0].position.x += 0.03;
  pythagorean.objects[0].position.y += 0.04;  // norm 5 cm
  CHECK_FALSE(is_success(pythagorean, goal, 0.05));

  ContinuousState close = goal;
  close.objects[0].position.x += 0.024;
  close.objects[0].position.y += 0.032;  // norm 4 cm
  CHECK(is_success(close, goal, 0.05));

  ContinuousState wrong_size;
  wrong_size.objects.resize(3);
  CHECK_THROWS(is_success(wrong_size, goal, 0.05));
}

TEST_CASE("whole-state metric differs from per-object") {
  PhysicsConfig cfg = quiet_physics();
  ContinuousState goal = two_blocks(false, true, cfg);
  ContinuousState spread = goal;
  spread.objects[0].position.x += 0.04;
  spread.objects[1].position.x += 0.04;  // each 4 cm, joint norm ~5.66 cm
  CHECK(is_success(spread, goal, 0.05, SuccessMetric::PerObject));
  CHECK_FALSE(is_success(spread, goal, 0.05, SuccessMetric::WholeState));
}

TEST_CASE("collect_dataset size, determinism, effect invariant") {
  CollectConfig cc;
  cc.num_samples = 500;
  cc.n_range = {2, 3};
  cc.physics = quiet_physics();
  cc.physics.noise_sigma = 0.01;
  cc.seed = 123;

  auto data = collect_dataset(cc);
  CHECK(data.size() == 500);

  auto again = collect_dataset(cc);
  std::ostringstream a, b;
  write_transitions(a, data, cc);
  write_transitions(b, again, cc);
  CHECK(a.str() == b.str());  // byte-identical

  for (const auto& tr : data) {
    REQUIRE(tr.pre.size() == tr.post.size());
    for (int i = 0; i < tr.pre.size(); ++i) {
      CHECK(tr.effect[i] == tr.post.pos(i) - tr.pre.pos(i));
    }
  }

  CollectConfig zero = cc;
  zero.num_samples = 0;
  CHECK_THROWS(collect_dataset(zero));
}

TEST_CASE("collect_dataset is independent of the job count") {
  CollectConfig cc;
  cc.num_samples = 300;
  cc.physics = quiet_physics();
  cc.physics.noise_sigma = 0.01;
  cc.seed = 9;
  cc.jobs = 1;
  auto serial = collect_dataset(cc);
  cc.jobs = 4;
  auto parallel = collect_dataset(cc);
  std::ostringstream a, b;
  write_transitions(a, serial, cc);
  write_transitions(b, parallel, cc);
  CHECK(a.str() == b.str());
}

TEST_CASE("simulator invariants over random rollouts") {
  PhysicsConfig cfg = quiet_physics();
  cfg.noise_sigma = 0.01;
  Rng rng(77);
  CollectConfig cc;
  cc.num_samples = 400;
  cc.physics = cfg;
  cc.seed = 31;
  auto data = collect_dataset(cc);
  for (const auto& tr : data) {
    CHECK(support_invariant_holds(tr.post, cfg));
    CHECK(no_interpenetration(tr.post, cfg));
    for (const auto& o : tr.post.objects) CHECK(o.position.z >= 0.0);
  }
}

TEST_CASE("generate_problem determinism and displacement guarantee") {
  ProblemGenConfig cfg;
  cfg.physics = quiet_physics();

  Problem p1 = generate_problem(3, 2, 7, cfg);
  Problem p2 = generate_problem(3, 2, 7, cfg);
  CHECK(problem_to_json(p1) == problem_to_json(p2));

  Problem q = generate_problem(2, 1, 5, cfg);
  bool moved = false;
  for (int i = 0; i < q.n; ++i)
    if ((q.goal.pos(i) - q.init.pos(i)).norm() > q.epsilon) moved = true;
  CHECK(moved);
}

TEST_CASE("full problem grid has 1500 instances") {
  ProblemGenConfig cfg;
  cfg.physics = quiet_physics();
  cfg.physics.noise_sigma = 0.01;
  int count = 0;
  for (int n : {2, 3, 4})
    for (int k : {1, 2, 3, 4, 5})
      for (int t = 0; t < 100; ++t) {
        std::uint64_t seed = derive_seed(
            99, "grid/" + std::to_string(n) + "/" + std::to_string(k) + "/" +
                    std::to_string(t));
        Problem p = generate_problem(n, k, seed, cfg);
        CHECK(p.init.size() == n);
        ++count;
      }
  CHECK(count == 1500);
}

TEST_CASE("transitions round-trip through the dataset file format") {
  CollectConfig cc;
  cc.num_samples = 50;
  cc.physics = quiet_physics();
  cc.seed = 4;
  auto data = collect_dataset(cc);
  std::ostringstream out;
  write_transitions(out, data, cc);
  std::istringstream in(out.str());
  auto back = read_transitions(in);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].pre == data[i].pre);
    CHECK(back[i].action == data[i].action);
    CHECK(back[i].post == data[i].post);
  }
}

TEST_CASE("problem files round-trip") {
  ProblemGenConfig cfg;
  cfg.physics = quiet_physics();
  Problem p = generate_problem(3, 1, 2024, cfg);
  Problem back = problem_from_json(problem_to_json(p));
  CHECK(back.init == p.init);
  CHECK(back.goal == p.goal);
  CHECK(back.epsilon == p.epsilon);
  CHECK(back.n == p.n);
  CHECK(back.k == p.k);
  CHECK(back.seed == p.seed);
}

}  // TEST_SUITE
