#include "bilevel/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bilevel/rng.hpp"

namespace bilevel {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string int_list(const std::vector<int>& v) {
  std::string out;
  for (int x : v) {
    if (!out.empty()) out += ',';
    out += std::to_string(x);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::vector<std::string> bad_keys;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash_at = line.find('#');
    if (hash_at != std::string::npos) line = line.substr(0, hash_at);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::string full = section.empty() ? key : section + "." + key;

    try {
      if (full == "physics.noise_sigma") {
        cfg.physics.noise_sigma = std::stod(value);
      } else if (full == "physics.large_edge") {
        cfg.physics.large_edge = std::stod(value);
      } else if (full == "physics.small_edge") {
        cfg.physics.small_edge = std::stod(value);
      } else if (full == "physics.table_size") {
        cfg.physics.table_size = std::stod(value);
      } else if (full == "physics.offset_unit") {
        cfg.physics.offset_unit = std::stod(value);
      } else if (full == "physics.support_frac") {
        cfg.physics.support_frac = std::stod(value);
      } else if (full == "abstraction.on_table_tol") {
        cfg.abstraction.on_table_tol = std::stod(value);
      } else if (full == "abstraction.on_z_tol") {
        cfg.abstraction.on_z_tol = std::stod(value);
      } else if (full == "abstraction.clear_z_tol") {
        cfg.abstraction.clear_z_tol = std::stod(value);
      } else if (full == "abstraction.near_scale") {
        cfg.abstraction.near_scale = std::stod(value);
      } else if (full == "dynamics.model") {
        if (value != "oracle" && value != "knn")
          throw ConfigError("dynamics.model must be oracle or knn");
        cfg.dynamics_model = value;
      } else if (full == "dynamics.k") {
        cfg.knn_k = std::stoi(value);
      } else if (full == "dynamics.train_samples") {
        cfg.train_samples = std::stoull(value);
      } else if (full == "dynamics.episode_length") {
        cfg.episode_length = std::stoi(value);
      } else if (full == "operators.min_support") {
        cfg.mining.min_support = std::stoull(value);
      } else if (full == "operators.min_fraction") {
        cfg.mining.min_fraction = std::stod(value);
      } else if (full == "planning.n_domains") {
        cfg.planner.num_domains = std::stoi(value);
      } else if (full == "planning.tau_verify") {
        cfg.planner.tau_verify = std::stod(value);
      } else if (full == "planning.w") {
        cfg.planner.search.w = std::stod(value);
      } else if (full == "planning.step_cost") {
        cfg.planner.search.step_cost = std::stod(value);
      } else if (full == "planning.h_stop") {
        cfg.planner.search.h_stop = std::stod(value);
      } else if (full == "planning.expansion_cap") {
        cfg.planner.search.expansion_cap = std::stoull(value);
      } else if (full == "planning.quantization") {
        cfg.planner.search.quantization = std::stod(value);
      } else if (full == "planning.solve_node_cap") {
        cfg.planner.solve_budget.max_expansions = std::stoull(value);
      } else if (full == "planning.solve_wall_seconds") {
        cfg.planner.solve_budget.wall_seconds = std::stod(value);
      } else if (full == "bench.n") {
        cfg.bench_ns = parse_int_list(value);
      } else if (full == "bench.k") {
        cfg.bench_ks = parse_int_list(value);
      } else if (full == "bench.trials") {
        cfg.bench_trials = std::stoi(value);
      } else if (full == "bench.methods") {
        cfg.bench_methods.clear();
        std::istringstream ms(value);
        std::string m;
        while (std::getline(ms, m, ',')) {
          auto parsed = method_from_name(trim(m));
          if (!parsed) throw ConfigError("unknown method: " + m);
          cfg.bench_methods.push_back(*parsed);
        }
      } else if (full == "bench.emit_timings") {
        cfg.emit_timings = value == "true" || value == "1";
      } else if (full == "run.seed") {
        cfg.seed = std::stoull(value);
      } else if (full == "run.jobs") {
        cfg.jobs = std::stoi(value);
      } else if (full == "run.epsilon") {
        cfg.epsilon = std::stod(value);
      } else if (full == "run.metric") {
        if (value == "per_object") {
          cfg.metric = SuccessMetric::PerObject;
        } else if (value == "whole_state") {
          cfg.metric = SuccessMetric::WholeState;
        } else {
          throw ConfigError("run.metric must be per_object or whole_state");
        }
      } else if (full == "run.n_range") {
        cfg.n_range = parse_int_list(value);
      } else {
        bad_keys.push_back(full);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": bad value for " + full + ": " + value);
    }
  }
  if (!bad_keys.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : bad_keys) msg += " " + k;
    throw ConfigError(msg);
  }
  cfg.planner.search.misplaced_threshold = cfg.epsilon;
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  out << "[physics]\n";
  out << "noise_sigma = " << fmt(physics.noise_sigma) << "\n";
  out << "large_edge = " << fmt(physics.large_edge) << "\n";
  out << "small_edge = " << fmt(physics.small_edge) << "\n";
  out << "table_size = " << fmt(physics.table_size) << "\n";
  out << "offset_unit = " << fmt(physics.offset_unit) << "\n";
  out << "support_frac = " << fmt(physics.support_frac) << "\n";
  out << "\n[abstraction]\n";
  out << "on_table_tol = " << fmt(abstraction.on_table_tol) << "\n";
  out << "on_z_tol = " << fmt(abstraction.on_z_tol) << "\n";
  out << "clear_z_tol = " << fmt(abstraction.clear_z_tol) << "\n";
  out << "near_scale = " << fmt(abstraction.near_scale) << "\n";
  out << "\n[dynamics]\n";
  out << "model = " << dynamics_model << "\n";
  out << "k = " << knn_k << "\n";
  out << "train_samples = " << train_samples << "\n";
  out << "episode_length = " << episode_length << "\n";
  out << "\n[operators]\n";
  out << "min_support = " << mining.min_support << "\n";
  out << "min_fraction = " << fmt(mining.min_fraction) << "\n";
  out << "\n[planning]\n";
  out << "n_domains = " << planner.num_domains << "\n";
  out << "tau_verify = " << fmt(planner.tau_verify) << "\n";
  out << "w = " << fmt(planner.search.w) << "\n";
  out << "step_cost = " << fmt(planner.search.step_cost) << "\n";
  out << "h_stop = " << fmt(planner.search.h_stop) << "\n";
  out << "expansion_cap = " << planner.search.expansion_cap << "\n";
  out << "quantization = " << fmt(planner.search.quantization) << "\n";
  out << "solve_node_cap = " << planner.solve_budget.max_expansions << "\n";
  out << "solve_wall_seconds = " << fmt(planner.solve_budget.wall_seconds)
      << "\n";
  out << "\n[bench]\n";
  out << "n = " << int_list(bench_ns) << "\n";
  out << "k = " << int_list(bench_ks) << "\n";
  out << "trials = " << bench_trials << "\n";
  out << "methods = ";
  for (std::size_t i = 0; i < bench_methods.size(); ++i)
    out << (i ? "," : "") << method_name(bench_methods[i]);
  out << "\n";
  out << "emit_timings = " << (emit_timings ? "true" : "false") << "\n";
  out << "\n[run]\n";
  out << "seed = " << seed << "\n";
  out << "jobs = " << jobs << "\n";
  out << "epsilon = " << fmt(epsilon) << "\n";
  out << "metric = "
      << (metric == SuccessMetric::PerObject ? "per_object" : "whole_state")
      << "\n";
  out << "n_range = " << int_list(n_range) << "\n";
  return out.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(dump()); }

void apply_full_grid(RunConfig& cfg) {
  cfg.bench_ns = {2, 3, 4};
  cfg.bench_ks = {1, 2, 3, 4, 5};
  cfg.bench_trials = 100;
}

}  // namespace bilevel
