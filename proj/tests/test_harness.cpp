#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "distill/harness.hpp"

using namespace distill;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("distill-harness-" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(Method m, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.method = m;
  cfg.seeds = {1, 2};
  cfg.output = out;
  cfg.eval_episodes = 20;
  cfg.retry.iterations = 10;
  cfg.critiq.iterations = 3;
  cfg.dagger.iterations = 3;
  return cfg;
}

int line_of_error(const std::string& text) {
  try {
    parse_config(text, "t.yaml");
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("config parsing with defaults and overrides") {
  const ExperimentConfig cfg = parse_config(
      "version: 1\nmethod: retry\nenv:\n  kind: room_graph\n  num_goals: 4\nseeds: [3, 4]\n"
      "retry:\n  mix: 0.25\n  baseline: none\n");
  CHECK(cfg.method == Method::retry);
  CHECK(cfg.env.kind == EnvKind::room_graph);
  CHECK(cfg.env.num_goals == 4);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(cfg.retry.mix == 0.25);
  CHECK(cfg.retry.baseline == Baseline::none);
  CHECK(cfg.eval_episodes == 100);
  CHECK(cfg.critiq.kappa == 0.5);
}

TEST_CASE("config errors point at the offending line") {
  CHECK(line_of_error("version: 1\nmethod: bc\ncolour: red\n") == 3);
  CHECK(line_of_error("version: 1\nenv:\n  kind: line_search\n  goals: 3\n") == 4);
  CHECK(line_of_error("version: 1\ncritiq:\n  iterations: 3\n  kappa: 1.5\n") == 4);
  CHECK(line_of_error("version: 1\nmethod: sarsa\n") == 2);
  CHECK(line_of_error("version: 1\neval_episodes: many\n") == 2);
  CHECK(line_of_error("version: 2\n") == 1);
  CHECK(line_of_error("version: 1\nseeds: [1, 1]\n") == 2);
  CHECK(line_of_error("method: bc\n") == 0);
  CHECK(line_of_error("version: 1\nenv: [1\n") >= 2);
}

TEST_CASE("run directories are byte-identical across invocations") {
  for (Method m : {Method::critiq, Method::retry}) {
    const fs::path a = fresh("det-a"), b = fresh("det-b");
    std::ostringstream err;
    REQUIRE(run_experiment(small(m, a), err) == 0);
    REQUIRE(run_experiment(small(m, b), err) == 0);
    for (const char* f : {"summary.csv", "config.json"}) CHECK(slurp(a / f) == slurp(b / f));
    for (const char* f : {"iterations.jsonl", "policy.json", "eval.json"}) {
      CHECK(slurp(a / "seed-1" / f) == slurp(b / "seed-1" / f));
      CHECK(slurp(a / "seed-2" / f) == slurp(b / "seed-2" / f));
    }
    CHECK_FALSE(fs::exists(a / "FAILED"));
  }
}

TEST_CASE("oracle runs report the optimal return") {
  const fs::path out = fresh("oracle");
  std::ostringstream err;
  REQUIRE(run_experiment(small(Method::oracle, out), err) == 0);
  const RunSummary run = read_run(out);
  for (const auto& e : run.evals) {
    CHECK(e.success_rate == 1.0);
    CHECK(*e.optimal_return == doctest::Approx(0.9512782481).epsilon(1e-9));
  }
}

TEST_CASE("compare aggregates runs and refuses mismatches") {
  const fs::path a = fresh("cmp-a"), b = fresh("cmp-b"), c = fresh("cmp-c"), out = fresh("cmp");
  std::ostringstream err;
  REQUIRE(run_experiment(small(Method::bc, a), err) == 0);
  REQUIRE(run_experiment(small(Method::dagger, b), err) == 0);
  compare_runs({a, b}, out);
  const std::string table = slurp(out / "comparison.csv");
  CHECK(table.find("\nbc,line_search,3,2,") != std::string::npos);
  CHECK(table.find("\ndagger,line_search,3,2,") != std::string::npos);
  CHECK(fs::exists(out / "exploration_series.csv"));
  CHECK(slurp(out / "delta_curves.csv").find("dagger,2,3,") != std::string::npos);

  ExperimentConfig other = small(Method::bc, c);
  other.seeds = {1, 3};
  REQUIRE(run_experiment(other, err) == 0);
  CHECK_THROWS_WITH_AS(compare_runs({a, c}, out), doctest::Contains("seed mismatch"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(compare_runs({a, fresh("nope")}, out), doctest::Contains("does not exist"),
                       std::runtime_error);
  fs::remove(b / "seed-2" / "eval.json");
  CHECK_THROWS_WITH_AS(compare_runs({a, b}, out), doctest::Contains("found: iterations.jsonl"),
                       std::runtime_error);
}

TEST_CASE("runtime failures leave a marker and the finished seeds") {
  const fs::path out = fresh("fail");
  fs::create_directories(out);
  std::ofstream(out / "seed-2") << "in the way";
  ExperimentConfig cfg = small(Method::bc, out);
  cfg.workers = 1;
  std::ostringstream err;
  CHECK(run_experiment(cfg, err) == 1);
  CHECK(fs::exists(out / "FAILED"));
  CHECK(fs::exists(out / "seed-1" / "policy.json"));
  CHECK(slurp(out / "summary.csv").find("\nbc,line_search,3,1,") != std::string::npos);
}
