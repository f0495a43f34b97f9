#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "distill/environments.hpp"
#include "distill/exact.hpp"
#include "distill/imitation.hpp"
#include "distill/metrics.hpp"
#include "distill/policy.hpp"
#include "distill/teacher.hpp"

namespace distill {

enum class Baseline { none, mean_return };

struct PgConfig {
  double learning_rate = 0.5;
  double gamma = 0.99;
  Baseline baseline = Baseline::mean_return;
};

/// Monte Carlo policy-gradient estimate averaged over the batch:
///   (1/B) sum_episodes sum_t gamma^t (G_t - b_t) grad log pi(a_t | o_t)
/// where G_t is the discounted return-to-go and b_t the batch mean of G_t at
/// step t (or 0 without a baseline). Throws ContractViolation when a
/// trajectory was not generated by this policy snapshot.
LogitGradient pg_gradient(const TabularPolicy& policy, const std::vector<Trajectory>& batch,
                          const PgConfig& cfg);

/// theta <- theta + learning_rate * pg_gradient(...)
TabularPolicy pg_update(const TabularPolicy& policy, const std::vector<Trajectory>& batch,
                        const PgConfig& cfg);

/// Reset distribution built from teacher- and student-visited states.
struct ResetPool {
  std::vector<PrivilegedState> teacher_states;
  std::vector<PrivilegedState> student_states;
  /// Probability of drawing a reset from teacher_states rather than from
  /// the initial-state distribution.
  double mix = 0.5;

  PrivilegedState sample(const ContextualMdp& env, RngStream& rng) const;
  /// Observation distribution of sample().
  std::map<Observation, double> observation_distribution(const ContextualMdp& env) const;
};

nlohmann::json reset_pool_to_json(const ResetPool& pool);
ResetPool reset_pool_from_json(const nlohmann::json& doc);

struct RetryConfig {
  int iterations = 150;
  int episodes_per_iter = 16;
  double learning_rate = 0.5;
  /// 0 uses the environment's discount.
  double gamma = 0.0;
  Baseline baseline = Baseline::mean_return;
  double mix = 0.5;
  int initial_teacher_rollouts = 50;
  int teacher_rollouts_per_iter = 10;
  int validation_episodes = 30;
  /// Smoothing of the logged reset-vs-optimal density ratio; 0 disables it.
  double ratio_smoothing = 1e-3;
};

void validate(const RetryConfig& cfg);

struct RetryResult {
  TabularPolicy policy{1};
  std::vector<IterationLog> logs;
  ResetPool pool;
  int best_iteration = 0;
};

/// Teacher-recovery resets: alternates student policy-gradient episodes
/// started from the reset pool with teacher rollouts launched from states
/// the student visited, which grow the pool.
RetryResult run_retry(const ContextualMdp& env, const TeacherPolicy& tp, const RetryConfig& cfg,
                      RngStream rng);

/// The same learner with resets only at sampled-context initial states.
RetryResult run_plain_rl(const ContextualMdp& env, const RetryConfig& cfg, RngStream rng);

}  // namespace distill
