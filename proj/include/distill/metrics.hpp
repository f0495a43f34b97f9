#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "distill/belief.hpp"
#include "distill/cmdp.hpp"
#include "distill/dataset.hpp"
#include "distill/policy.hpp"

namespace distill {

enum class ExplorationLevel { none = 0, low = 1, medium = 2, high = 3 };

std::string to_string(ExplorationLevel level);

/// Exploration level of one episode: the number of distinct goals probed,
/// capped at three (None/Low/Medium/High). A successful episode counts as
/// High because it probed every goal it needed to.
ExplorationLevel exploration_level(const ContextualMdp& env, const Trajectory& traj);

struct ExplorationHistogram {
  std::array<std::int64_t, 4> counts{};

  void add(ExplorationLevel level) { ++counts[static_cast<int>(level)]; }
  void merge(const ExplorationHistogram& other);
  std::int64_t total() const;
  /// Most frequent level; ties go to the lower level.
  ExplorationLevel mode() const;

  bool operator==(const ExplorationHistogram&) const = default;
};

enum class EvalMode { greedy, sample };

struct EvalReport {
  double success_rate = 0.0;
  /// Mean discounted return over the evaluated episodes.
  double mean_return = 0.0;
  /// Exact expected return of the evaluated policy, when enumerable.
  std::optional<double> exact_return;
  std::optional<double> optimal_return;
  /// optimal_return - exact_return.
  std::optional<double> regret;
  ExplorationHistogram exploration;
  int episodes = 0;
  std::uint64_t seed = 0;

  bool operator==(const EvalReport&) const = default;
};

struct EvalOptions {
  EvalMode mode = EvalMode::greedy;
  /// Compute the exact return by enumeration.
  bool exact = true;
  std::optional<double> optimal_return;
};

/// Fresh-context episodes from the initial states.
EvalReport evaluate(const ContextualMdp& env, const ObservationPolicy& policy, int n_episodes,
                    RngStream rng, const EvalOptions& options = {});

/// One row per training iteration; iteration 0 describes the initial policy.
struct IterationLog {
  int iteration = 0;
  std::int64_t queries_made = 0;
  std::int64_t dataset_size = 0;
  double delta_total = 0.0;
  std::int64_t delta_mismatches = 0;
  std::int64_t delta_count = 0;
  std::optional<double> train_loss;
  /// Minimum training cross-entropy so far.
  std::optional<double> epsilon_min;
  /// Greedy 0-1 disagreement with the training labels.
  std::optional<double> train_error;
  /// train_error below the configured well-trained threshold.
  std::optional<bool> well_trained;
  double validation_success = 0.0;
  double validation_return = 0.0;
  ExplorationHistogram exploration;
  std::optional<std::int64_t> reset_teacher_states;
  std::optional<std::int64_t> reset_student_states;
  std::optional<std::int64_t> teacher_pool_observations;
  std::optional<double> density_ratio;
  std::optional<double> batch_mean_return;
};

constexpr const char* kIterationSchema = "distill.iteration/1";
constexpr const char* kEvalSchema = "distill.eval/1";

nlohmann::json to_json(const IterationLog& log);
IterationLog iteration_log_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalReport& report);

struct DeltaCurve {
  std::vector<double> values;
  std::vector<double> increments;
  /// Decided by exact rational comparison of the mismatch counts.
  bool non_decreasing = true;
};

DeltaCurve delta_curve(const std::vector<IterationLog>& logs);

struct EpsilonDecomposition {
  double epsilon = 0.0;
  double epsilon_model = 0.0;
  double delta = 0.0;
  /// Amount removed when clipping epsilon_model at zero.
  double clipped = 0.0;
};

/// 0-1 disagreement of `policy` with the dataset labels, split into the
/// dataset's Bayes error and the remainder.
EpsilonDecomposition epsilon_decomposition(const AggDataset& ds, const ObservationPolicy& policy,
                                           EvalMode mode = EvalMode::greedy);

struct RatioReport {
  double sup_ratio = 1.0;
  std::map<Observation, double> ratios;
  double smoothing = 0.0;
  /// Some reset mass lies where the target has none.
  bool disjoint_support = false;
  std::optional<double> advantage_sup;
};

/// Smoothed sup ratio max_o (p(o) + eta) / (q(o) + eta) over the union
/// support, after renormalising both inputs.
RatioReport density_ratio(const std::map<Observation, double>& reset_dist,
                          const std::map<Observation, double>& target_dist, double smoothing);

/// max over the given beliefs and all actions of -A^{pi_opt}(b, a).
double advantage_sup(const RealizablePolicy& rp, const std::vector<std::size_t>& beliefs);

/// Empirical observation visitation of `policy` from initial states.
std::map<Observation, double> sampled_visitation(const ContextualMdp& env,
                                                 const ObservationPolicy& policy, int episodes,
                                                 RngStream rng);

}  // namespace distill
