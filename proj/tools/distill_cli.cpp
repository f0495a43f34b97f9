// Command-line front end: run, compare, eval, oracle.
#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "distill/belief.hpp"
#include "distill/environments.hpp"
#include "distill/exact.hpp"
#include "distill/harness.hpp"
#include "distill/store.hpp"
#include "distill/teacher.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace distill;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct EnvFlags {
  std::string kind;
  int goals = 0;
  int horizon = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--env", kind, "line_search, push_line or room_graph");
    cmd->add_option("--goals", goals, "number of goals K");
    cmd->add_option("--horizon", horizon, "episode horizon (0 = per-kind default)");
  }
  void apply(EnvConfig& env) const {
    if (!kind.empty()) env.kind = env_kind_from_string(kind);
    if (goals > 0) env.num_goals = goals;
    if (horizon > 0) env.horizon = horizon;
  }
};

json oracle_report(const EnvConfig& ec) {
  const EnvPtr env = make_env(ec);
  const auto states = enumerate_states(*env);
  const RealizablePolicy rp = solve_belief_mdp(*env);
  const TeacherPolicy tp = plan_teacher(*env);
  std::set<Observation> observations;
  for (const auto& s : states) observations.insert(env->observe(s));
  const DeterministicPolicy pi = rp.observation_policy();
  const ExactModel model = ExactModel::build(*env);
  ExactModel undiscounted = model;
  undiscounted.gamma = 1.0;
  json teacher_values = json::array();
  for (Context c = 0; c < env->num_contexts(); ++c)
    teacher_values.push_back(tp.value(env->initial(c)));
  return json{{"env", to_string(ec.kind)},
              {"num_goals", ec.num_goals},
              {"horizon", env->horizon()},
              {"gamma", env->gamma()},
              {"states", states.size()},
              {"observations", observations.size()},
              {"aliased_observations", aliased_observations(*env, states).size()},
              {"beliefs", rp.beliefs().size()},
              {"optimal_return", rp.optimal_return()},
              {"optimal_return_exact", exact_return(model, pi)},
              {"optimal_success", exact_return(undiscounted, pi)},
              {"teacher_values", teacher_values}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher-student distillation experiments on discrete search tasks"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "train a method over seeds and write a run directory");
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir, method;
  int episodes = 0, workers = -1;
  EnvFlags run_env;
  run->add_option("--config", config_path, "YAML experiment config");
  run->add_option("--seed", seeds, "seed(s) replacing the config's list");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--method", method, "bc, dagger, critiq, retry, plain_rl or oracle");
  run->add_option("--episodes", episodes, "evaluation episodes per seed");
  run->add_option("--workers", workers, "parallel seed workers (0 = all cores)");
  run_env.add(run);

  // compare
  auto* cmp = app.add_subcommand("compare", "aggregate completed runs on the same env and seeds");
  std::vector<std::string> run_dirs;
  std::string cmp_out = "comparison";
  cmp->add_option("runs", run_dirs, "run directories")->required();
  cmp->add_option("--out", cmp_out, "output directory");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a stored policy");
  std::string policy_path, eval_config, eval_out;
  std::uint64_t eval_seed = 1;
  int eval_episodes = 100;
  bool sample = false;
  EnvFlags eval_env;
  ev->add_option("--policy", policy_path, "policy.json file")->required();
  ev->add_option("--config", eval_config, "take the environment from this config");
  ev->add_option("--seed", eval_seed, "evaluation seed");
  ev->add_option("--episodes", eval_episodes, "episodes");
  ev->add_option("--out", eval_out, "write the report here instead of stdout");
  ev->add_flag("--sample", sample, "sample actions instead of playing the argmax");
  eval_env.add(ev);

  // oracle
  auto* orc = app.add_subcommand("oracle", "solve the belief MDP and report the optimum");
  std::string oracle_config;
  EnvFlags oracle_env;
  orc->add_option("--config", oracle_config, "take the environment from this config");
  oracle_env.add(orc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      ExperimentConfig cfg;
      try {
        if (!config_path.empty()) cfg = load_config(config_path);
        run_env.apply(cfg.env);
        if (!seeds.empty()) cfg.seeds = seeds;
        if (!out_dir.empty()) cfg.output = out_dir;
        if (!method.empty()) cfg.method = method_from_string(method);
        if (episodes > 0) cfg.eval_episodes = episodes;
        if (workers >= 0) cfg.workers = workers;
        validate(cfg);
      } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      const int code = run_experiment(cfg, std::cerr);
      if (code == 0) std::cout << "wrote " << cfg.output.string() << "\n";
      return code;
    }
    if (*cmp) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      compare_runs(dirs, cmp_out);
      std::cout << "wrote " << cmp_out << "\n";
      return 0;
    }
    if (*ev) {
      EnvConfig ec;
      try {
        if (!eval_config.empty()) ec = load_config(eval_config).env;
        eval_env.apply(ec);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      const EnvPtr env = make_env(ec);
      const StoredPolicy stored = load_policy(policy_path);
      EvalOptions opts;
      opts.mode = sample ? EvalMode::sample : EvalMode::greedy;
      try {
        opts.optimal_return = solve_belief_mdp(*env).optimal_return();
      } catch (const CapExceeded&) {
        opts.exact = false;
      }
      const EvalReport r =
          evaluate(*env, stored.policy, eval_episodes, RngStream(eval_seed, "eval"), opts);
      const std::string text = to_json(r).dump(2) + "\n";
      if (eval_out.empty())
        std::cout << text;
      else
        write_document(eval_out, to_json(r));
      return 0;
    }
    if (*orc) {
      EnvConfig ec;
      try {
        if (!oracle_config.empty()) ec = load_config(oracle_config).env;
        oracle_env.apply(ec);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      std::cout << oracle_report(ec).dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
