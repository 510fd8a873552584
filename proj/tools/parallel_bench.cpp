// Timing comparison between the serial reference path (jobs=1) and the
// OpenMP kernels: dataset collection, batched knn prediction, and sampled
// domain solving. Outputs are checked for equality while timing.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <vector>

#include "bilevel/bench.hpp"
#include "bilevel/parallel.hpp"

using namespace bilevel;

namespace {

double time_once(const char* label, int jobs, double baseline,
                 const std::function<void()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (baseline > 0.0) {
    std::printf("%-28s jobs=%-2d %8.3fs  speedup %.2fx\n", label, jobs, dt,
                baseline / dt);
  } else {
    std::printf("%-28s jobs=%-2d %8.3fs\n", label, jobs, dt);
  }
  return dt;
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = default_jobs();
  if (argc > 1) jobs = std::atoi(argv[1]);
  std::printf("hardware threads: %d, parallel jobs: %d\n\n", default_jobs(),
              jobs);

  PhysicsConfig physics;
  physics.noise_sigma = 0.01;
  ReferenceEncoder encoder(physics);

  // --- dataset collection ---
  CollectConfig cc;
  cc.num_samples = 20000;
  cc.physics = physics;
  cc.seed = 7;
  cc.jobs = 1;
  std::vector<Transition> serial_data, parallel_data;
  double base = time_once("collect 20k (serial)", 1, 0.0,
                          [&] { serial_data = collect_dataset(cc); });
  cc.jobs = jobs;
  time_once("collect 20k (parallel)", jobs, base,
            [&] { parallel_data = collect_dataset(cc); });
  if (!(serial_data.size() == parallel_data.size() &&
        serial_data[0].post == parallel_data[0].post)) {
    std::fprintf(stderr, "FAIL: parallel collection diverged from serial\n");
    return 1;
  }

  // --- knn batch prediction ---
  KnnPredictor model = KnnPredictor::fit(serial_data);
  std::vector<ContinuousState> probes;
  std::vector<ActionSpec> probe_actions;
  for (std::size_t i = 0; i < serial_data.size() && probes.size() < 2000;
       i += 10) {
    probes.push_back(serial_data[i].pre);
    probe_actions.push_back(serial_data[i].action);
  }
  std::vector<EffectPrediction> serial_pred(probes.size());
  std::vector<EffectPrediction> parallel_pred(probes.size());
  base = time_once("knn predict 2k (serial)", 1, 0.0, [&] {
    parallel_for(probes.size(), 1, [&](std::size_t i) {
      serial_pred[i] = model.predict(probes[i], probe_actions[i]);
    });
  });
  time_once("knn predict 2k (parallel)", jobs, base, [&] {
    parallel_for(probes.size(), jobs, [&](std::size_t i) {
      parallel_pred[i] = model.predict(probes[i], probe_actions[i]);
    });
  });
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!(serial_pred[i].per_object == parallel_pred[i].per_object)) {
      std::fprintf(stderr, "FAIL: parallel knn diverged from serial\n");
      return 1;
    }
  }

  // --- sampled-domain solving ---
  auto ops = mine(symbolize(serial_data, encoder), encoder);
  ProblemGenConfig pg;
  pg.physics = physics;
  Problem problem = generate_problem(3, 2, 42, pg);
  auto [sym_init, sym_goal] = encode_problem(problem, encoder);
  auto domains = sample_domains(ops, 100, 11);
  std::vector<PlanCandidate> serial_cands, parallel_cands;
  base = time_once("solve 100 domains (serial)", 1, 0.0, [&] {
    serial_cands = probabilistic_plan(sym_init, sym_goal, domains, {}, {}, 1);
  });
  time_once("solve 100 domains (parallel)", jobs, base, [&] {
    parallel_cands =
        probabilistic_plan(sym_init, sym_goal, domains, {}, {}, jobs);
  });
  if (serial_cands.size() != parallel_cands.size()) {
    std::fprintf(stderr, "FAIL: parallel solving diverged from serial\n");
    return 1;
  }

  std::printf("\nserial and parallel outputs identical\n");
  return 0;
}
