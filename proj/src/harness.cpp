#include "distill/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "distill/belief.hpp"
#include "distill/exact.hpp"
#include "distill/store.hpp"
#include "distill/teacher.hpp"

namespace distill {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::bc: return "bc";
    case Method::dagger: return "dagger";
    case Method::critiq: return "critiq";
    case Method::retry: return "retry";
    case Method::plain_rl: return "plain_rl";
    case Method::oracle: return "oracle";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::bc, Method::dagger, Method::critiq, Method::retry, Method::plain_rl,
                   Method::oracle})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected bc, dagger, critiq, retry, plain_rl or oracle)");
}

namespace {

std::string config_message(const std::string& source, int line, const std::string& message) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  os << ": " << message;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, const std::string& message)
    : std::runtime_error(config_message(source, line, message)),
      source_(std::move(source)),
      line_(line) {}

namespace {

// yaml-cpp reader that reports the line of the offending node.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    throw ConfigError(source_, node.IsDefined() ? node.Mark().line + 1 : 0, message);
  }

  void require_map(const YAML::Node& node, const std::string& where) const {
    if (!node.IsMap()) fail(node, where + " must be a mapping");
  }

  void check_keys(const YAML::Node& map, const std::string& where,
                  std::initializer_list<std::string_view> allowed) const {
    for (auto it = map.begin(); it != map.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        fail(it->first, "unknown field '" + key + "' in " + where);
    }
  }

  template <class T>
  void read(const YAML::Node& map, const char* key, T& out) const {
    const YAML::Node node = map[key];
    if (!node) return;
    if (!node.IsScalar()) fail(node, std::string("field '") + key + "' must be a scalar");
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, std::string("field '") + key + "' has an invalid value '" +
                     node.as<std::string>() + "'");
    }
  }

  void read_optional(const YAML::Node& map, const char* key, std::optional<double>& out) const {
    const YAML::Node node = map[key];
    if (!node || node.IsNull()) return;
    double x = 0.0;
    read(map, key, x);
    out = x;
  }

 private:
  std::string source_;
};

Baseline baseline_from_string(const std::string& s) {
  if (s == "none") return Baseline::none;
  if (s == "mean_return") return Baseline::mean_return;
  throw std::invalid_argument("unknown baseline '" + s + "' (expected none or mean_return)");
}

std::string to_string(Baseline b) { return b == Baseline::none ? "none" : "mean_return"; }

}  // namespace

namespace {
std::string validation_error(const ExperimentConfig& cfg);
int line_of(const YAML::Node& root, const std::string& message);
}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.msg);
  }
  Reader r(source);
  if (!root.IsMap()) throw ConfigError(source, 0, "top level must be a mapping");
  r.check_keys(root, "config",
               {"version", "env", "method", "seeds", "output", "eval_episodes", "workers", "bc",
                "dagger", "critiq", "retry"});

  ExperimentConfig cfg;
  if (!root["version"]) throw ConfigError(source, 0, "missing required field 'version'");
  r.read(root, "version", cfg.version);
  if (cfg.version != kConfigVersion)
    r.fail(root["version"], "unsupported config version " + std::to_string(cfg.version));

  if (const YAML::Node m = root["method"]) {
    std::string name;
    r.read(root, "method", name);
    try {
      cfg.method = method_from_string(name);
    } catch (const std::invalid_argument& e) {
      r.fail(m, e.what());
    }
  }

  if (const YAML::Node env = root["env"]) {
    r.require_map(env, "env");
    r.check_keys(env, "env", {"kind", "num_goals", "horizon", "gamma", "spacing", "context_prior"});
    if (const YAML::Node kind = env["kind"]) {
      std::string name;
      r.read(env, "kind", name);
      try {
        cfg.env.kind = env_kind_from_string(name);
      } catch (const std::invalid_argument& e) {
        r.fail(kind, e.what());
      }
    }
    r.read(env, "num_goals", cfg.env.num_goals);
    r.read(env, "horizon", cfg.env.horizon);
    r.read(env, "gamma", cfg.env.gamma);
    r.read(env, "spacing", cfg.env.spacing);
    if (const YAML::Node prior = env["context_prior"]) {
      if (!prior.IsSequence()) r.fail(prior, "env.context_prior must be a list");
      cfg.env.context_prior.clear();
      for (const auto& p : prior) {
        try {
          cfg.env.context_prior.push_back(p.as<double>());
        } catch (const YAML::Exception&) {
          r.fail(p, "env.context_prior entries must be numbers");
        }
      }
    }
  }

  if (const YAML::Node seeds = root["seeds"]) {
    if (!seeds.IsSequence() || seeds.size() == 0) r.fail(seeds, "seeds must be a non-empty list");
    cfg.seeds.clear();
    for (const auto& s : seeds) {
      try {
        cfg.seeds.push_back(s.as<std::uint64_t>());
      } catch (const YAML::Exception&) {
        r.fail(s, "seeds must be non-negative integers");
      }
    }
  }
  if (root["output"]) {
    std::string out;
    r.read(root, "output", out);
    cfg.output = out;
  }
  r.read(root, "eval_episodes", cfg.eval_episodes);
  r.read(root, "workers", cfg.workers);

  if (const YAML::Node bc = root["bc"]) {
    r.require_map(bc, "bc");
    r.check_keys(bc, "bc", {"num_demos", "ridge", "validation_episodes"});
    r.read(bc, "num_demos", cfg.bc.num_demos);
    r.read(bc, "ridge", cfg.bc.ridge);
    r.read(bc, "validation_episodes", cfg.bc.validation_episodes);
  }
  if (const YAML::Node d = root["dagger"]) {
    r.require_map(d, "dagger");
    r.check_keys(d, "dagger",
                 {"iterations", "episodes_per_iter", "num_demos", "ridge", "validation_episodes"});
    r.read(d, "iterations", cfg.dagger.iterations);
    r.read(d, "episodes_per_iter", cfg.dagger.episodes_per_iter);
    r.read(d, "num_demos", cfg.dagger.num_demos);
    r.read(d, "ridge", cfg.dagger.ridge);
    r.read(d, "validation_episodes", cfg.dagger.validation_episodes);
  }
  if (const YAML::Node c = root["critiq"]) {
    r.require_map(c, "critiq");
    r.check_keys(c, "critiq",
                 {"iterations", "episodes_per_iter", "num_demos", "kappa", "lambda_reg", "ridge",
                  "discriminator_smoothing", "validation_episodes", "aggregate_recovery",
                  "alpha_welltrained"});
    r.read(c, "iterations", cfg.critiq.iterations);
    r.read(c, "episodes_per_iter", cfg.critiq.episodes_per_iter);
    r.read(c, "num_demos", cfg.critiq.num_demos);
    r.read(c, "kappa", cfg.critiq.kappa);
    r.read(c, "lambda_reg", cfg.critiq.lambda_reg);
    r.read(c, "ridge", cfg.critiq.ridge);
    r.read(c, "discriminator_smoothing", cfg.critiq.discriminator_smoothing);
    r.read(c, "validation_episodes", cfg.critiq.validation_episodes);
    r.read(c, "aggregate_recovery", cfg.critiq.aggregate_recovery);
    r.read_optional(c, "alpha_welltrained", cfg.critiq.alpha_welltrained);
  }
  if (const YAML::Node t = root["retry"]) {
    r.require_map(t, "retry");
    r.check_keys(t, "retry",
                 {"iterations", "episodes_per_iter", "learning_rate", "gamma", "baseline", "mix",
                  "initial_teacher_rollouts", "teacher_rollouts_per_iter", "validation_episodes",
                  "ratio_smoothing"});
    r.read(t, "iterations", cfg.retry.iterations);
    r.read(t, "episodes_per_iter", cfg.retry.episodes_per_iter);
    r.read(t, "learning_rate", cfg.retry.learning_rate);
    r.read(t, "gamma", cfg.retry.gamma);
    if (const YAML::Node b = t["baseline"]) {
      std::string name;
      r.read(t, "baseline", name);
      try {
        cfg.retry.baseline = baseline_from_string(name);
      } catch (const std::invalid_argument& e) {
        r.fail(b, e.what());
      }
    }
    r.read(t, "mix", cfg.retry.mix);
    r.read(t, "initial_teacher_rollouts", cfg.retry.initial_teacher_rollouts);
    r.read(t, "teacher_rollouts_per_iter", cfg.retry.teacher_rollouts_per_iter);
    r.read(t, "validation_episodes", cfg.retry.validation_episodes);
    r.read(t, "ratio_smoothing", cfg.retry.ratio_smoothing);
  }

  if (const std::string error = validation_error(cfg); !error.empty())
    throw ConfigError(source, line_of(root, error), error);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot read config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

namespace {

// Empty when the config is valid; otherwise "<section>.<field> ..." or an
// "env: ..." message.
std::string validation_error(const ExperimentConfig& cfg) {
  try {
    make_env(cfg.env);
  } catch (const std::invalid_argument& e) {
    return std::string("env: ") + e.what();
  }
  try {
    validate(cfg.dagger);
    validate(cfg.critiq);
    validate(cfg.retry);
    if (cfg.bc.num_demos < 1) return "bc.num_demos must be >= 1";
    if (cfg.bc.validation_episodes < 1) return "bc.validation_episodes must be >= 1";
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  if (cfg.seeds.empty()) return "seeds must be a non-empty list";
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
    return "seeds must be distinct";
  if (cfg.eval_episodes < 1) return "eval_episodes must be >= 1";
  if (cfg.workers < 0) return "workers must be >= 0";
  return {};
}

// Line of the field a validation message names, 0 when it is not present.
int line_of(const YAML::Node& root, const std::string& message) {
  const std::string path = message.substr(0, message.find_first_of(" :"));
  YAML::Node node;
  node.reset(root);
  int line = 0;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (!node.IsMap() || !node[key]) return line;
    YAML::Node child = node[key];
    node.reset(child);
    line = node.Mark().line + 1;
    if (dot == std::string::npos) return line;
    start = dot + 1;
  }
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const std::string error = validation_error(cfg);
  if (!error.empty()) throw ConfigError("<config>", 0, error);
}

json to_json(const ExperimentConfig& cfg) {
  json env{{"kind", to_string(cfg.env.kind)},
           {"num_goals", cfg.env.num_goals},
           {"horizon", cfg.env.horizon},
           {"gamma", cfg.env.gamma},
           {"spacing", cfg.env.spacing},
           {"context_prior", cfg.env.context_prior}};
  json critiq{{"iterations", cfg.critiq.iterations},
              {"episodes_per_iter", cfg.critiq.episodes_per_iter},
              {"num_demos", cfg.critiq.num_demos},
              {"kappa", cfg.critiq.kappa},
              {"lambda_reg", cfg.critiq.lambda_reg},
              {"ridge", cfg.critiq.ridge},
              {"discriminator_smoothing", cfg.critiq.discriminator_smoothing},
              {"validation_episodes", cfg.critiq.validation_episodes},
              {"aggregate_recovery", cfg.critiq.aggregate_recovery},
              {"alpha_welltrained", cfg.critiq.alpha_welltrained
                                        ? json(*cfg.critiq.alpha_welltrained)
                                        : json(nullptr)}};
  return json{
      {"version", cfg.version},
      {"env", env},
      {"method", to_string(cfg.method)},
      {"seeds", cfg.seeds},
      {"eval_episodes", cfg.eval_episodes},
      {"bc",
       {{"num_demos", cfg.bc.num_demos},
        {"ridge", cfg.bc.ridge},
        {"validation_episodes", cfg.bc.validation_episodes}}},
      {"dagger",
       {{"iterations", cfg.dagger.iterations},
        {"episodes_per_iter", cfg.dagger.episodes_per_iter},
        {"num_demos", cfg.dagger.num_demos},
        {"ridge", cfg.dagger.ridge},
        {"validation_episodes", cfg.dagger.validation_episodes}}},
      {"critiq", critiq},
      {"retry",
       {{"iterations", cfg.retry.iterations},
        {"episodes_per_iter", cfg.retry.episodes_per_iter},
        {"learning_rate", cfg.retry.learning_rate},
        {"gamma", cfg.retry.gamma},
        {"baseline", to_string(cfg.retry.baseline)},
        {"mix", cfg.retry.mix},
        {"initial_teacher_rollouts", cfg.retry.initial_teacher_rollouts},
        {"teacher_rollouts_per_iter", cfg.retry.teacher_rollouts_per_iter},
        {"validation_episodes", cfg.retry.validation_episodes},
        {"ratio_smoothing", cfg.retry.ratio_smoothing}}}};
}

TabularPolicy tabulate(const DeterministicPolicy& policy,
                       const std::vector<Observation>& observations) {
  TabularPolicy out(policy.num_actions());
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (const auto& o : observations) {
    std::vector<double> row(policy.num_actions(), neg_inf);
    row[policy.action(o)] = 0.0;
    out.set_row(o, row);
  }
  return out;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const EnvPtr env = make_env(cfg.env);
  const RngStream train(seed, "train");
  SeedOutcome out;
  out.seed = seed;

  std::optional<RealizablePolicy> oracle;
  try {
    oracle = solve_belief_mdp(*env);
  } catch (const CapExceeded&) {
  }

  auto take = [&](TrainResult r) {
    out.policy = std::move(r.policy);
    out.logs = std::move(r.logs);
    out.best_iteration = r.best_iteration;
  };
  switch (cfg.method) {
    case Method::bc: take(run_bc(*env, plan_teacher(*env), cfg.bc, train)); break;
    case Method::dagger: take(run_dagger(*env, plan_teacher(*env), cfg.dagger, train)); break;
    case Method::critiq: take(run_critiq(*env, plan_teacher(*env), cfg.critiq, train)); break;
    case Method::retry:
    case Method::plain_rl: {
      RetryResult r = cfg.method == Method::retry
                          ? run_retry(*env, plan_teacher(*env), cfg.retry, train)
                          : run_plain_rl(*env, cfg.retry, train);
      out.policy = std::move(r.policy);
      out.logs = std::move(r.logs);
      out.best_iteration = r.best_iteration;
      break;
    }
    case Method::oracle: {
      if (!oracle) throw CapExceeded("oracle method needs an enumerable environment");
      std::set<Observation> seen;
      for (const auto& s : enumerate_states(*env)) seen.insert(env->observe(s));
      out.policy = tabulate(oracle->observation_policy(),
                            std::vector<Observation>(seen.begin(), seen.end()));
      IterationLog log;
      const EvalReport v =
          validate_policy(*env, out.policy, cfg.critiq.validation_episodes, train.child("validation"));
      log.validation_success = v.success_rate;
      log.validation_return = v.mean_return;
      log.exploration = v.exploration;
      out.logs.push_back(log);
      break;
    }
  }
  for (const auto& log : out.logs) out.total_queries += log.queries_made;

  EvalOptions opts;
  if (oracle) opts.optimal_return = oracle->optimal_return();
  const RngStream eval_stream(seed, "eval");
  try {
    out.eval = evaluate(*env, out.policy, cfg.eval_episodes, eval_stream, opts);
  } catch (const CapExceeded&) {
    opts.exact = false;
    out.eval = evaluate(*env, out.policy, cfg.eval_episodes, eval_stream, opts);
  }
  return out;
}

namespace {

// Shortest representation that reads back to the same double.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : ""; }

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

fs::path seed_dir(const fs::path& root, std::uint64_t seed) {
  return root / ("seed-" + std::to_string(seed));
}

json seed_tag(const ExperimentConfig& cfg, std::uint64_t seed) {
  return json{{"method", to_string(cfg.method)},
              {"env", to_string(cfg.env.kind)},
              {"num_goals", cfg.env.num_goals},
              {"seed", seed}};
}

void write_seed(const ExperimentConfig& cfg, const SeedOutcome& o) {
  const fs::path dir = seed_dir(cfg.output, o.seed);
  fs::create_directories(dir);
  std::string lines;
  for (const auto& log : o.logs) {
    json j = to_json(log);
    j["method"] = to_string(cfg.method);
    j["seed"] = o.seed;
    lines += j.dump() + "\n";
  }
  write_text(dir / "iterations.jsonl", lines);
  json meta = seed_tag(cfg, o.seed);
  meta["best_iteration"] = o.best_iteration;
  save_policy(dir / "policy.json", o.policy, meta);
  json ev = to_json(o.eval);
  ev.update(seed_tag(cfg, o.seed));
  write_document(dir / "eval.json", ev);
}

const char* kSummaryHeader =
    "method,env,num_goals,seed,success_rate,mean_return,exact_return,optimal_return,regret,"
    "explore_none,explore_low,explore_medium,explore_high,exploration_mode,best_iteration,"
    "iterations,total_queries,final_delta_total\n";

std::string summary_row(const ExperimentConfig& cfg, const SeedOutcome& o) {
  const EvalReport& e = o.eval;
  std::ostringstream os;
  os << to_string(cfg.method) << ',' << to_string(cfg.env.kind) << ',' << cfg.env.num_goals << ','
     << o.seed << ',' << num(e.success_rate) << ',' << num(e.mean_return) << ','
     << opt_num(e.exact_return) << ',' << opt_num(e.optimal_return) << ',' << opt_num(e.regret);
  for (auto c : e.exploration.counts) os << ',' << c;
  os << ',' << to_string(e.exploration.mode()) << ',' << o.best_iteration << ','
     << (o.logs.empty() ? 0 : o.logs.back().iteration) << ',' << o.total_queries << ','
     << (o.logs.empty() ? std::string() : num(o.logs.back().delta_total)) << '\n';
  return os.str();
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& err) {
  validate(cfg);
  fs::create_directories(cfg.output);
  fs::remove(cfg.output / "FAILED");
  write_document(cfg.output / "config.json", to_json(cfg));

  const std::size_t n = cfg.seeds.size();
  std::vector<std::optional<SeedOutcome>> outcomes(n);
  std::vector<std::string> errors(n);
  std::vector<double> seconds(n, 0.0);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        SeedOutcome o = run_seed(cfg, cfg.seeds[i]);
        write_seed(cfg, o);
        outcomes[i] = std::move(o);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      seconds[i] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  unsigned slots = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                   : std::max(1u, std::thread::hardware_concurrency());
  slots = std::min<unsigned>(slots, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < slots; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string summary = kSummaryHeader;
  std::string timing;
  std::string failures;
  for (std::size_t i = 0; i < n; ++i) {
    timing += "seed=" + std::to_string(cfg.seeds[i]) + " seconds=" + num(seconds[i]) + "\n";
    if (outcomes[i]) summary += summary_row(cfg, *outcomes[i]);
    if (!errors[i].empty())
      failures += "seed " + std::to_string(cfg.seeds[i]) + ": " + errors[i] + "\n";
  }
  write_text(cfg.output / "summary.csv", summary);
  write_text(cfg.output / "timing.log", timing);
  if (!failures.empty()) {
    write_text(cfg.output / "FAILED", failures);
    err << failures;
    return 1;
  }
  return 0;
}

namespace {

EvalReport eval_from_json(const json& j) {
  EvalReport r;
  r.success_rate = j.at("success_rate").get<double>();
  r.mean_return = j.at("mean_return").get<double>();
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return real_from_json(j.at(key));
  };
  r.exact_return = opt("exact_return");
  r.optimal_return = opt("optimal_return");
  r.regret = opt("regret");
  r.exploration.counts = {j.at("explore_none").get<std::int64_t>(),
                          j.at("explore_low").get<std::int64_t>(),
                          j.at("explore_medium").get<std::int64_t>(),
                          j.at("explore_high").get<std::int64_t>()};
  r.episodes = j.at("episodes").get<int>();
  r.seed = j.at("stream").get<std::uint64_t>();
  return r;
}

std::string listing(const fs::path& dir) {
  std::vector<std::string> names;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& s : names) out += (out.empty() ? "" : ", ") + s;
  return out.empty() ? "(nothing)" : out;
}

}  // namespace

RunSummary read_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
    throw std::runtime_error("run directory " + dir.string() + " does not exist; found in " +
                             parent.string() + ": " + listing(parent));
  }
  auto need = [&](const fs::path& p) {
    if (!fs::exists(p))
      throw std::runtime_error("run directory " + dir.string() + " is missing " +
                               fs::relative(p, dir).string() + "; found: " +
                               listing(p.parent_path()));
  };
  if (fs::exists(dir / "FAILED"))
    throw std::runtime_error("run directory " + dir.string() + " is marked FAILED");
  need(dir / "config.json");
  RunSummary run;
  run.dir = dir;
  run.config = read_document(dir / "config.json");
  run.seeds = run.config.at("seeds").get<std::vector<std::uint64_t>>();
  for (auto seed : run.seeds) {
    const fs::path sd = seed_dir(dir, seed);
    need(sd / "eval.json");
    need(sd / "iterations.jsonl");
    run.evals.push_back(eval_from_json(read_document(sd / "eval.json")));
    std::ifstream in(sd / "iterations.jsonl");
    std::vector<IterationLog> logs;
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) logs.push_back(iteration_log_from_json(json::parse(line)));
    run.logs.push_back(std::move(logs));
  }
  return run;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stderr_of_mean(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

void compare_runs(const std::vector<fs::path>& dirs, const fs::path& out) {
  if (dirs.size() < 2) throw std::runtime_error("compare needs at least two run directories");
  std::vector<RunSummary> runs;
  for (const auto& d : dirs) runs.push_back(read_run(d));
  const json& env0 = runs[0].config.at("env");
  for (const auto& r : runs) {
    if (r.config.at("env") != env0)
      throw std::runtime_error("environment mismatch: " + runs[0].dir.string() + " has " +
                               env0.dump() + " but " + r.dir.string() + " has " +
                               r.config.at("env").dump());
    if (r.seeds != runs[0].seeds)
      throw std::runtime_error("seed mismatch: " + runs[0].dir.string() + " has " +
                               json(runs[0].seeds).dump() + " but " + r.dir.string() + " has " +
                               json(r.seeds).dump());
  }

  std::string table =
      "method,env,num_goals,seeds,success_mean,success_stderr,return_mean,return_stderr,"
      "regret_mean,exploration_mode,final_delta_mean\n";
  std::string series = "method,iteration,none,low,medium,high,mode\n";
  std::string deltas = "method,seed,iteration,delta_total,non_decreasing\n";
  for (const auto& r : runs) {
    const std::string method = r.config.at("method").get<std::string>();
    std::vector<double> success, ret, regret, final_delta;
    ExplorationHistogram overall;
    for (std::size_t k = 0; k < r.seeds.size(); ++k) {
      success.push_back(r.evals[k].success_rate);
      ret.push_back(r.evals[k].mean_return);
      if (r.evals[k].regret) regret.push_back(*r.evals[k].regret);
      overall.merge(r.evals[k].exploration);
      if (!r.logs[k].empty()) final_delta.push_back(r.logs[k].back().delta_total);
    }
    table += method + "," + env0.at("kind").get<std::string>() + "," +
             std::to_string(env0.at("num_goals").get<int>()) + "," +
             std::to_string(r.seeds.size()) + "," + num(mean(success)) + "," +
             num(stderr_of_mean(success)) + "," + num(mean(ret)) + "," +
             num(stderr_of_mean(ret)) + "," + (regret.empty() ? "" : num(mean(regret))) + "," +
             to_string(overall.mode()) + "," +
             (final_delta.empty() ? "" : num(mean(final_delta))) + "\n";

    std::map<int, ExplorationHistogram> by_iter;
    for (const auto& logs : r.logs)
      for (const auto& log : logs) by_iter[log.iteration].merge(log.exploration);
    for (const auto& [it, h] : by_iter) {
      series += method + "," + std::to_string(it);
      for (auto c : h.counts) series += "," + std::to_string(c);
      series += "," + to_string(h.mode()) + "\n";
    }

    for (std::size_t k = 0; k < r.seeds.size(); ++k) {
      const DeltaCurve curve = delta_curve(r.logs[k]);
      for (std::size_t i = 0; i < r.logs[k].size(); ++i)
        deltas += method + "," + std::to_string(r.seeds[k]) + "," +
                  std::to_string(r.logs[k][i].iteration) + "," + num(curve.values[i]) + "," +
                  (curve.non_decreasing ? "true" : "false") + "\n";
    }
  }
  fs::create_directories(out);
  write_text(out / "comparison.csv", table);
  write_text(out / "exploration_series.csv", series);
  write_text(out / "delta_curves.csv", deltas);
}

}  // namespace distill
