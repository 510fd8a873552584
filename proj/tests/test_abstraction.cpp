#include "bilevel/abstraction.hpp"
#include "doctest.h"

using namespace bilevel;

namespace {

ContinuousState on_table_pair(const PhysicsConfig& cfg, double separation) {
  ContinuousState s;
  ObjectFeature a, b;
  a.is_large = false;
  a.position = {0.3, 0.5, a.half(cfg)};
  b.is_large = true;
  b.position = {0.3 + separation, 0.5, b.half(cfg)};
  s.objects = {a, b};
  return s;
}

}  // namespace

TEST_SUITE("abstraction") {

TEST_CASE("unary bits: type, on-table, clear") {
  PhysicsConfig phys;
  ReferenceEncoder enc(phys);
  ContinuousState s = on_table_pair(phys, 0.3);
  SymbolicState sym = enc.encode(s);
  CHECK(sym.u(0, 0) == 0);  // small
  CHECK(sym.u(1, 0) == 1);  // large
  CHECK(sym.u(0, 1) == 1);  // on table
  CHECK(sym.u(1, 1) == 1);
  CHECK(sym.u(0, 2) == 1);  // clear
  CHECK(sym.u(1, 2) == 1);
}

TEST_CASE("stacking sets on(i,j) asymmetrically and clears bits") {
  PhysicsConfig phys;
  ReferenceEncoder enc(phys);
  ContinuousState s = on_table_pair(phys, 0.3);
  ContinuousState stacked = step_noise_free(s, {0, 0, 1, 0}, phys);
  SymbolicState sym = enc.encode(stacked);
  CHECK(sym.r(0, 0, 1) == 1);  // on(small, large)
  CHECK(sym.r(0, 1, 0) == 0);
  CHECK(sym.u(0, 1) == 0);  // small no longer on table
  CHECK(sym.u(1, 2) == 0);  // large no longer clear
  CHECK(sym.u(0, 2) == 1);  // small is clear
}

TEST_CASE("near head and its threshold") {
  PhysicsConfig phys;
  ReferenceEncoder enc(phys);
  // threshold is 2 * large edge = 12 cm
  SymbolicState far = enc.encode(on_table_pair(phys, 0.5));
  CHECK(far.r(1, 0, 1) == 0);
  CHECK(far.r(1, 1, 0) == 0);
  SymbolicState close = enc.encode(on_table_pair(phys, 0.11));
  CHECK(close.r(1, 0, 1) == 1);
  CHECK(close.r(1, 1, 0) == 1);
  SymbolicState edge = enc.encode(on_table_pair(phys, 0.121));
  CHECK(edge.r(1, 0, 1) == 0);
}

TEST_CASE("encode is deterministic and boolean") {
  PhysicsConfig phys;
  ReferenceEncoder enc(phys);
  ContinuousState s = on_table_pair(phys, 0.08);
  SymbolicState a = enc.encode(s);
  SymbolicState b = enc.encode(s);
  CHECK(a == b);
  for (auto bit : a.unary) CHECK((bit == 0 || bit == 1));
  for (auto bit : a.relational) CHECK((bit == 0 || bit == 1));
}

TEST_CASE("translation invariance over random scenes") {
  PhysicsConfig phys;
  phys.noise_sigma = 0.01;
  ReferenceEncoder enc(phys);
  CollectConfig cc;
  cc.num_samples = 60;
  cc.physics = phys;
  cc.seed = 17;
  auto data = collect_dataset(cc);
  for (const auto& tr : data) {
    SymbolicState base = enc.encode(tr.post);
    ContinuousState shifted = tr.post;
    for (auto& o : shifted.objects) {
      o.position.x += 0.013;
      o.position.y -= 0.041;
    }
    CHECK(enc.encode(shifted) == base);
  }
}

TEST_CASE("permutation equivariance") {
  PhysicsConfig phys;
  ReferenceEncoder enc(phys);
  ContinuousState s = on_table_pair(phys, 0.09);
  ObjectFeature extra;
  extra.is_large = true;
  extra.position = {0.7, 0.2, extra.half(phys)};
  s.objects.push_back(extra);

  SymbolicState sym = enc.encode(s);
  ContinuousState swapped = s;
  std::swap(swapped.objects[0], swapped.objects[2]);
  SymbolicState sym_swapped = enc.encode(swapped);

  auto perm = [](int i) { return i == 0 ? 2 : (i == 2 ? 0 : i); };
  for (int i = 0; i < 3; ++i)
    for (int d = 0; d < sym.d_z; ++d)
      CHECK(sym.u(i, d) == sym_swapped.u(perm(i), d));
  for (int k = 0; k < sym.K; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(sym.r(k, i, j) == sym_swapped.r(k, perm(i), perm(j)));
}

TEST_CASE("encode_problem reflects the goal change") {
  PhysicsConfig phys;
  ProblemGenConfig cfg;
  cfg.physics = phys;
  ReferenceEncoder enc(phys);

  Problem p;
  p.init = on_table_pair(phys, 0.3);
  p.goal = step_noise_free(p.init, {0, 0, 1, 0}, phys);
  p.n = 2;
  auto [sym_init, sym_goal] = encode_problem(p, enc);
  CHECK(sym_init.r(0, 0, 1) == 0);
  CHECK(sym_goal.r(0, 0, 1) == 1);

  Problem same = p;
  same.goal = same.init;
  auto [a, b] = encode_problem(same, enc);
  CHECK(a == b);
}

TEST_CASE("bitstring round-trip") {
  PhysicsConfig phys;
  ReferenceEncoder enc(phys);
  ContinuousState s = on_table_pair(phys, 0.07);
  SymbolicState sym = enc.encode(s);
  std::string bits = sym.to_bitstring();
  CHECK(bits.size() == static_cast<std::size_t>(2 * 3 + 2 * 2 * 2));
  SymbolicState back = SymbolicState::from_bitstring(2, 3, 2, bits);
  CHECK(back == sym);
  CHECK_THROWS(SymbolicState::from_bitstring(2, 3, 2, "01"));
}

}  // TEST_SUITE
