#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "distill/environments.hpp"
#include "distill/imitation.hpp"
#include "distill/metrics.hpp"
#include "distill/reinforce.hpp"

namespace distill {

enum class Method { bc, dagger, critiq, retry, plain_rl, oracle };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

constexpr int kConfigVersion = 1;

struct ExperimentConfig {
  int version = kConfigVersion;
  EnvConfig env;
  Method method = Method::critiq;
  BcConfig bc;
  DaggerConfig dagger;
  CritiqConfig critiq;
  RetryConfig retry;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output = "runs/out";
  int eval_episodes = 100;
  /// Parallel seed workers; 0 uses the hardware concurrency.
  int workers = 0;
};

/// Invalid configuration. `line` is 1-based, 0 when no position applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, const std::string& message);
  int line() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  int line_;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Checks ranges of every section; throws ConfigError with line 0.
void validate(const ExperimentConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct SeedOutcome {
  std::uint64_t seed = 0;
  TabularPolicy policy{1};
  std::vector<IterationLog> logs;
  EvalReport eval;
  int best_iteration = 0;
  std::int64_t total_queries = 0;
};

/// Trains the configured method for one seed and evaluates the result.
SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs every seed and writes the run directory:
///   config.json, summary.csv, timing.log (wall clock, not deterministic),
///   seed-<s>/{iterations.jsonl, policy.json, eval.json}
/// On failure a FAILED file describing the error is left next to whatever
/// was already written. Returns 0 on success, 1 on a runtime failure.
int run_experiment(const ExperimentConfig& cfg, std::ostream& err);

struct RunSummary {
  std::filesystem::path dir;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> evals;
  std::vector<std::vector<IterationLog>> logs;
};

/// Reads a completed run directory. Throws std::runtime_error listing the
/// files that were found when something is missing.
RunSummary read_run(const std::filesystem::path& dir);

/// Writes comparison.csv, exploration_series.csv and delta_curves.csv.
/// Throws std::runtime_error when the runs disagree on env or seeds.
void compare_runs(const std::vector<std::filesystem::path>& dirs,
                  const std::filesystem::path& out);

/// Policy that plays a deterministic table through zero / -inf logits.
TabularPolicy tabulate(const DeterministicPolicy& policy,
                       const std::vector<Observation>& observations);

double mean(const std::vector<double>& xs);
double stderr_of_mean(const std::vector<double>& xs);

}  // namespace distill
