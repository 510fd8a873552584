#include <cstdio>
#include <filesystem>

#include "bilevel/dynamics.hpp"
#include "doctest.h"

using namespace bilevel;

TEST_SUITE("dynamics") {

TEST_CASE("oracle consistency: state + effect reproduces the simulator") {
  PhysicsConfig phys;
  OraclePredictor oracle(phys);
  CollectConfig cc;
  cc.num_samples = 200;
  cc.physics = phys;
  cc.seed = 55;
  auto data = collect_dataset(cc);
  for (const auto& tr : data) {
    EffectPrediction eff = oracle.predict(tr.pre, tr.action);
    ContinuousState truth = step_noise_free(tr.pre, tr.action, phys);
    for (int i = 0; i < tr.pre.size(); ++i) {
      Vec3 rolled = tr.pre.pos(i) + eff.per_object[i];
      CHECK(std::abs(rolled.x - truth.pos(i).x) < 1e-12);
      CHECK(std::abs(rolled.y - truth.pos(i).y) < 1e-12);
      CHECK(std::abs(rolled.z - truth.pos(i).z) < 1e-12);
    }
  }
}

TEST_CASE("oracle returns zero effect for infeasible grasps") {
  PhysicsConfig phys;
  OraclePredictor oracle(phys);
  ContinuousState s;
  ObjectFeature small, large;
  small.is_large = false;
  small.position = {0.3, 0.5, small.half(phys)};
  large.is_large = true;
  large.position = {0.6, 0.5, large.half(phys)};
  s.objects = {small, large};
  // out-of-reach offset on the small block
  EffectPrediction eff = oracle.predict(s, {0, 1, 1, 0});
  for (const auto& e : eff.per_object) CHECK(e == Vec3{0, 0, 0});
}

TEST_CASE("knn: determinism and training-point recovery with k=1") {
  PhysicsConfig phys;
  phys.noise_sigma = 0.01;
  CollectConfig cc;
  cc.num_samples = 2000;
  cc.physics = phys;
  cc.seed = 88;
  auto data = collect_dataset(cc);

  KnnPredictor k1 = KnnPredictor::fit(data, {1});
  // probe transitions drawn from the training set are recovered exactly
  for (std::size_t i = 0; i < data.size(); i += 97) {
    EffectPrediction eff = k1.predict(data[i].pre, data[i].action);
    for (int o = 0; o < data[i].pre.size(); ++o) {
      CHECK(eff.per_object[o].x == data[i].effect[o].x);
      CHECK(eff.per_object[o].y == data[i].effect[o].y);
      CHECK(eff.per_object[o].z == data[i].effect[o].z);
    }
  }

  KnnPredictor a = KnnPredictor::fit(data);
  KnnPredictor b = KnnPredictor::fit(data);
  for (std::size_t i = 0; i < data.size(); i += 173) {
    EffectPrediction ea = a.predict(data[i].pre, data[i].action);
    EffectPrediction eb = b.predict(data[i].pre, data[i].action);
    CHECK(ea.per_object == eb.per_object);
  }

  CHECK_THROWS(KnnPredictor::fit({}));
}

TEST_CASE("knn predictions are finite and zero-filled for unseen keys") {
  PhysicsConfig phys;
  CollectConfig cc;
  cc.num_samples = 50;
  cc.n_range = {2};
  cc.physics = phys;
  cc.seed = 3;
  auto data = collect_dataset(cc);
  KnnPredictor model = KnnPredictor::fit(data);
  // a state with types that may not appear in the tiny training set
  ContinuousState s;
  ObjectFeature a, b;
  a.is_large = true;
  a.position = {0.2, 0.2, a.half(phys)};
  b.is_large = true;
  b.position = {0.8, 0.8, b.half(phys)};
  s.objects = {a, b};
  EffectPrediction eff = model.predict(s, {0, -1, 1, 1});
  for (const auto& e : eff.per_object) {
    CHECK(std::isfinite(e.x));
    CHECK(std::isfinite(e.y));
    CHECK(std::isfinite(e.z));
  }
}

TEST_CASE("knn model persists through save/load") {
  PhysicsConfig phys;
  phys.noise_sigma = 0.01;
  CollectConfig cc;
  cc.num_samples = 600;
  cc.physics = phys;
  cc.seed = 21;
  auto data = collect_dataset(cc);
  KnnPredictor model = KnnPredictor::fit(data);

  auto path = std::filesystem::temp_directory_path() / "bilevel_test.knn";
  model.save(path.string());
  KnnPredictor loaded = KnnPredictor::load(path.string());
  CHECK(loaded.rows() == model.rows());
  for (std::size_t i = 0; i < data.size(); i += 41) {
    EffectPrediction ea = model.predict(data[i].pre, data[i].action);
    EffectPrediction eb = loaded.predict(data[i].pre, data[i].action);
    CHECK(ea.per_object == eb.per_object);
  }
  std::filesystem::remove(path);
}

TEST_CASE("knn held-out error stays within the desk-scale bound") {
  PhysicsConfig phys;
  phys.noise_sigma = 0.01;
  CollectConfig train_cfg;
  train_cfg.num_samples = 50000;
  train_cfg.physics = phys;
  train_cfg.seed = 1001;
  auto train = collect_dataset(train_cfg);

  CollectConfig test_cfg = train_cfg;
  test_cfg.num_samples = 20000;
  test_cfg.seed = 2002;
  auto held_out = collect_dataset(test_cfg);

  KnnPredictor model = KnnPredictor::fit(train);
  double total_err = 0.0;
  std::uint64_t count = 0;
  for (const auto& tr : held_out) {
    EffectPrediction eff = model.predict(tr.pre, tr.action);
    for (int i = 0; i < tr.pre.size(); ++i) {
      total_err += (eff.per_object[i] - tr.effect[i]).norm();
      ++count;
    }
  }
  double mean_err = total_err / static_cast<double>(count);
  MESSAGE("mean per-object effect error: ", mean_err, " m");
  CHECK(mean_err <= 0.03);
}

}  // TEST_SUITE
