#ifndef BILEVEL_CONFIG_HPP
#define BILEVEL_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bilevel/bench.hpp"

namespace bilevel {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration in [section] blocks; '#' comments. Unknown
// keys are rejected with the full offending list. Defaults carry the
// reference operating point: N=100 sampled domains, tau_verify=7cm, w=1.5,
// epsilon=5cm, h_stop=5cm.
struct RunConfig {
  // [physics]
  PhysicsConfig physics;
  // [abstraction]
  AbstractionConfig abstraction;
  // [dynamics]
  std::string dynamics_model = "knn";  // oracle | knn
  int knn_k = 5;
  std::uint64_t train_samples = 50000;
  int episode_length = 10;
  // [operators]
  MiningConfig mining;
  // [planning]
  BilevelConfig planner;
  // [bench]
  std::vector<int> bench_ns = {2, 3};
  std::vector<int> bench_ks = {1, 2, 3};
  int bench_trials = 50;
  std::vector<Method> bench_methods = {Method::Deterministic,
                                       Method::Probabilistic,
                                       Method::Continuous, Method::Bilevel};
  bool emit_timings = false;
  // [run]
  std::uint64_t seed = 0;
  int jobs = 1;
  double epsilon = 0.05;
  SuccessMetric metric = SuccessMetric::PerObject;
  std::vector<int> n_range = {2, 3, 4};  // dataset collection

  std::string dump() const;          // round-trips through parse
  std::uint64_t hash() const;        // hash of the dump, for manifests
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

// paper-scale grid (n in {2,3,4}, k in 1..5, 100 trials/cell)
void apply_full_grid(RunConfig& cfg);

}  // namespace bilevel

#endif
