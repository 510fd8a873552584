// Command-line entry point: collect / fit / predict / mine / export-pddl /
// export-ppddl / plan / verify / search / bench / dump-config.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "bilevel/bench.hpp"
#include "bilevel/config.hpp"
#include "bilevel/parallel.hpp"
#include "json.hpp"

namespace {

using namespace bilevel;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitPlanningFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  return cfg;
}

std::unique_ptr<Predictor> load_predictor(const std::string& model_path,
                                          const RunConfig& cfg) {
  if (model_path == "oracle" || model_path.empty())
    return std::make_unique<OraclePredictor>(cfg.physics);
  return std::make_unique<KnnPredictor>(KnnPredictor::load(model_path));
}

void write_manifest(const fs::path& dir, const RunConfig& cfg) {
  std::ofstream m(dir / "manifest.txt");
  m << "bilevel-planner 1\n";
  m << "config_hash " << cfg.hash() << "\n";
  m << "schema transitions=1 problem=1 operators=1 knn-model=1\n";
}

nlohmann::json outcome_json(const BilevelOutcome& outcome, bool emit_timings,
                            double wall_seconds) {
  nlohmann::json j;
  j["level"] = outcome.level == PlanLevel::Symbolic     ? "symbolic"
               : outcome.level == PlanLevel::Continuous ? "continuous"
                                                        : "failed";
  j["plan"] = outcome.plan ? plan_to_text(*outcome.plan) : "";
  j["candidates_considered"] = outcome.candidates_considered;
  j["verifier_calls"] = outcome.verifier_calls;
  j["expansions"] = outcome.expansions;
  if (emit_timings) j["wall_seconds"] = wall_seconds;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"bilevel tabletop planner"};
  app.require_subcommand(1);
  argv = app.ensure_utf8(argv);

  CommonOpts common;
  app.add_option("--config", common.config_path, "configuration file")
      ->expected(1);
  app.add_option("--seed", common.seed, "master seed (overrides config)");
  app.add_option("--jobs", common.jobs, "worker parallelism");

  // collect
  auto* collect = app.add_subcommand("collect", "random-exploration dataset");
  std::uint64_t samples = 1000;
  std::string objects = "2,3,4";
  std::optional<double> noise_sigma;
  std::string out_path = "dataset.jsonl";
  collect->add_option("--samples", samples, "number of transitions");
  collect->add_option("--objects", objects, "object counts, e.g. 2,3,4");
  collect->add_option("--noise-sigma", noise_sigma, "release noise sigma");
  collect->add_option("--out", out_path, "output file");

  // fit
  auto* fit = app.add_subcommand("fit", "fit the knn effect predictor");
  std::string fit_dataset, fit_out = "model.knn";
  fit->add_option("--dataset", fit_dataset, "transitions file")->required();
  fit->add_option("--out", fit_out, "model output file");

  // predict
  auto* predict = app.add_subcommand("predict", "one effect prediction");
  std::string pr_model, pr_state, pr_action;
  predict->add_option("--model", pr_model, "model file or 'oracle'")
      ->required();
  predict->add_option("--state", pr_state, "problem file (init state is used)")
      ->required();
  predict->add_option("--action", pr_action, "pick,di,place,dj")->required();

  // mine
  auto* mine_cmd = app.add_subcommand("mine", "mine probabilistic operators");
  std::string mine_dataset, mine_out = "mined.ops";
  mine_cmd->add_option("--dataset", mine_dataset, "transitions file")
      ->required();
  mine_cmd->add_option("--out", mine_out, "operators output file");

  // export-pddl / export-ppddl
  auto* expddl = app.add_subcommand("export-pddl",
                                    "deterministic projection as PDDL");
  auto* exppddl = app.add_subcommand("export-ppddl", "operators as PPDDL");
  std::string ops_in, export_out;
  for (auto* cmd : {expddl, exppddl}) {
    cmd->add_option("--operators", ops_in, "mined operators file")->required();
    cmd->add_option("--out", export_out, "output file (default: stdout)");
  }

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "solve one problem");
  std::string plan_problem, plan_ops, plan_model = "oracle";
  std::string plan_mode = "bilevel";
  std::optional<int> plan_domains;
  std::optional<double> plan_tau, plan_w;
  std::optional<std::uint64_t> plan_cap;
  std::string plan_out;
  plan_cmd->add_option("--problem", plan_problem, "problem file")->required();
  plan_cmd->add_option("--operators", plan_ops, "mined operators file");
  plan_cmd->add_option("--model", plan_model, "model file or 'oracle'");
  plan_cmd
      ->add_option("--mode", plan_mode,
                   "deterministic|probabilistic|continuous|bilevel")
      ->check(CLI::IsMember(
          {"deterministic", "probabilistic", "continuous", "bilevel"}));
  plan_cmd->add_option("--n-domains", plan_domains, "sampled domains");
  plan_cmd->add_option("--tau", plan_tau, "verification threshold");
  plan_cmd->add_option("--w", plan_w, "heuristic weight");
  plan_cmd->add_option("--cap", plan_cap, "expansion cap");
  plan_cmd->add_option("--out", plan_out, "write plan file here");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "verify a plan file");
  std::string v_problem, v_plan, v_model = "oracle";
  std::optional<double> v_tau;
  verify_cmd->add_option("--problem", v_problem, "problem file")->required();
  verify_cmd->add_option("--plan", v_plan, "plan file")->required();
  verify_cmd->add_option("--model", v_model, "model file or 'oracle'");
  verify_cmd->add_option("--tau", v_tau, "verification threshold");

  // search
  auto* search_cmd = app.add_subcommand("search", "continuous forward search");
  std::string s_problem, s_model = "oracle", s_out;
  std::optional<double> s_w;
  std::optional<std::uint64_t> s_cap;
  search_cmd->add_option("--problem", s_problem, "problem file")->required();
  search_cmd->add_option("--model", s_model, "model file or 'oracle'");
  search_cmd->add_option("--w", s_w, "heuristic weight");
  search_cmd->add_option("--cap", s_cap, "expansion cap");
  search_cmd->add_option("--out", s_out, "write plan file here");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "experiment grid");
  std::string bench_out_dir = "out";
  bool bench_full = false;
  bench_cmd->add_option("--out-dir", bench_out_dir, "output directory");
  bench_cmd->add_flag("--full", bench_full, "paper-scale grid");

  // dump-config
  auto* dump_cmd = app.add_subcommand("dump-config",
                                      "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  RunConfig cfg = resolve_config(common);
  if (cfg.jobs <= 0) cfg.jobs = default_jobs();
  ReferenceEncoder encoder(cfg.physics, cfg.abstraction);

  if (collect->parsed()) {
    CollectConfig cc;
    cc.num_samples = samples;
    cc.physics = cfg.physics;
    if (noise_sigma) cc.physics.noise_sigma = *noise_sigma;
    cc.episode_length = cfg.episode_length;
    cc.seed = derive_seed(cfg.seed, "collect");
    cc.jobs = cfg.jobs;
    cc.n_range.clear();
    std::istringstream ss(objects);
    std::string item;
    while (std::getline(ss, item, ',')) cc.n_range.push_back(std::stoi(item));
    auto data = collect_dataset(cc);
    write_transitions_file(out_path, data, cc);
    std::cout << "wrote " << data.size() << " transitions to " << out_path
              << "\n";
    return kExitOk;
  }

  if (fit->parsed()) {
    auto data = read_transitions_file(fit_dataset);
    KnnPredictor model = KnnPredictor::fit(data, {cfg.knn_k});
    model.save(fit_out);
    std::cout << "fitted knn (k=" << cfg.knn_k << ") on " << model.rows()
              << " object rows; saved to " << fit_out << "\n";
    return kExitOk;
  }

  if (predict->parsed()) {
    auto predictor = load_predictor(pr_model, cfg);
    Problem p = read_problem_file(pr_state);
    ActionSpec a;
    if (std::sscanf(pr_action.c_str(), "%d,%d,%d,%d", &a.pick_index,
                    &a.pick_offset, &a.place_index, &a.place_offset) != 4) {
      std::cerr << "bad --action, expected pick,di,place,dj\n";
      return kExitUsage;
    }
    EffectPrediction eff = predictor->predict(p.init, a);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : eff.per_object) out.push_back({e.x, e.y, e.z});
    std::cout << out.dump() << "\n";
    return kExitOk;
  }

  if (mine_cmd->parsed()) {
    auto data = read_transitions_file(mine_dataset);
    auto records = symbolize(data, encoder);
    auto ops = mine(records, encoder, cfg.mining);
    write_operators_file(mine_out, ops, encoder);
    std::cout << "mined " << ops.size() << " operators from " << data.size()
              << " transitions; saved to " << mine_out << "\n";
    return kExitOk;
  }

  if (expddl->parsed() || exppddl->parsed()) {
    auto ops = read_operators_file(ops_in, encoder);
    std::string text;
    if (expddl->parsed()) {
      text = emit_pddl(deterministic_projection(ops, encoder), encoder);
    } else {
      text = emit_ppddl(ops, encoder);
    }
    if (export_out.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(export_out);
      f << text;
    }
    return kExitOk;
  }

  if (plan_cmd->parsed() || search_cmd->parsed()) {
    const bool searching = search_cmd->parsed();
    Problem problem =
        read_problem_file(searching ? s_problem : plan_problem);
    BilevelConfig pc = cfg.planner;
    pc.jobs = cfg.jobs;
    if (plan_domains) pc.num_domains = *plan_domains;
    if (plan_tau) pc.tau_verify = *plan_tau;
    if (plan_w) pc.search.w = *plan_w;
    if (s_w) pc.search.w = *s_w;
    if (plan_cap) pc.search.expansion_cap = *plan_cap;
    if (s_cap) pc.search.expansion_cap = *s_cap;
    pc.search.misplaced_threshold = problem.epsilon;

    auto t0 = std::chrono::steady_clock::now();
    BilevelOutcome outcome;
    std::string mode = searching ? "continuous" : plan_mode;
    auto predictor = load_predictor(searching ? s_model : plan_model, cfg);

    if (mode == "continuous") {
      auto res =
          continuous_search(problem.init, problem.goal, *predictor, pc.search);
      outcome.expansions = res.expansions;
      outcome.plan = res.plan;
      outcome.level = res.plan ? PlanLevel::Continuous : PlanLevel::Failed;
    } else {
      if ((searching ? std::string() : plan_ops).empty()) {
        std::cerr << "--operators is required for symbolic modes\n";
        return kExitUsage;
      }
      auto ops = read_operators_file(plan_ops, encoder);
      if (mode == "bilevel") {
        outcome = bilevel_plan(problem, ops, *predictor, encoder, pc,
                               derive_seed(cfg.seed, "plan"));
      } else {
        auto [sym_init, sym_goal] = encode_problem(problem, encoder);
        std::vector<SampledDomain> domains;
        if (mode == "deterministic") {
          domains.resize(1);
          domains[0].operators = deterministic_projection(ops, encoder);
        } else {
          domains = sample_domains(ops, pc.num_domains,
                                   derive_seed(cfg.seed, "plan/domains"));
        }
        auto cands =
            probabilistic_plan(sym_init, sym_goal, domains, pc.solve_budget,
                               pc.goal_convention, cfg.jobs);
        outcome.candidates_considered = cands.size();
        if (!cands.empty()) {
          outcome.plan = cands.front().actions;
          outcome.level = PlanLevel::Symbolic;
        }
      }
    }
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    std::cout << outcome_json(outcome, cfg.emit_timings, wall).dump(2) << "\n";
    const std::string& plan_file = searching ? s_out : plan_out;
    if (outcome.plan && !plan_file.empty()) {
      std::ofstream f(plan_file);
      f << plan_to_text(*outcome.plan);
    }
    return outcome.plan ? kExitOk : kExitPlanningFailure;
  }

  if (verify_cmd->parsed()) {
    Problem problem = read_problem_file(v_problem);
    std::ifstream pf(v_plan);
    if (!pf) {
      std::cerr << "cannot open plan file: " << v_plan << "\n";
      return kExitUsage;
    }
    std::stringstream ss;
    ss << pf.rdbuf();
    auto plan = parse_plan(ss.str());
    auto predictor = load_predictor(v_model, cfg);
    double tau = v_tau.value_or(cfg.planner.tau_verify);
    VerifierVerdict verdict =
        verify(plan, problem.init, problem.goal, *predictor, tau);
    nlohmann::json j{
        {"status", verdict.verified ? "Verified" : "Unverified"},
        {"max_object_distance", verdict.max_object_distance},
        {"tau", tau}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  if (bench_cmd->parsed()) {
    if (bench_full) apply_full_grid(cfg);
    fs::create_directories(bench_out_dir);

    // end-to-end: collect, fit, mine, evaluate — reproducible from the config
    CollectConfig cc;
    cc.num_samples = cfg.train_samples;
    cc.n_range = cfg.n_range;
    cc.episode_length = cfg.episode_length;
    cc.physics = cfg.physics;
    cc.seed = derive_seed(cfg.seed, "collect");
    cc.jobs = cfg.jobs;
    auto data = collect_dataset(cc);
    auto ops = mine(symbolize(data, encoder), encoder, cfg.mining);

    std::unique_ptr<Predictor> predictor;
    if (cfg.dynamics_model == "oracle") {
      predictor = std::make_unique<OraclePredictor>(cfg.physics);
    } else {
      predictor =
          std::make_unique<KnnPredictor>(KnnPredictor::fit(data, {cfg.knn_k}));
    }

    SuiteConfig sc;
    sc.ns = cfg.bench_ns;
    sc.ks = cfg.bench_ks;
    sc.trials = cfg.bench_trials;
    sc.methods = cfg.bench_methods;
    sc.physics = cfg.physics;
    sc.planner = cfg.planner;
    sc.epsilon = cfg.epsilon;
    sc.seed = cfg.seed;
    sc.jobs = cfg.jobs;
    SuiteResult result = run_suite(sc, ops, *predictor, encoder);

    {
      std::ofstream f(fs::path(bench_out_dir) / "records.txt");
      write_records(f, result.records, cfg.emit_timings);
    }
    {
      std::ofstream f(fs::path(bench_out_dir) / "cells.csv");
      write_cells_csv(f, result.cells, cfg.emit_timings);
    }
    {
      std::ofstream f(fs::path(bench_out_dir) / "summary.md");
      write_summary_table(f, result.cells);
    }
    write_manifest(bench_out_dir, cfg);
    std::cout << "bench complete: " << result.records.size()
              << " trial records in " << bench_out_dir << "\n";
    return kExitOk;
  }

  if (dump_cmd->parsed()) {
    std::cout << cfg.dump();
    return kExitOk;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bilevel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
