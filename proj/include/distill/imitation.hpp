#pragma once

#include <optional>
#include <set>
#include <vector>

#include "distill/dataset.hpp"
#include "distill/discriminator.hpp"
#include "distill/environments.hpp"
#include "distill/metrics.hpp"
#include "distill/policy.hpp"
#include "distill/teacher.hpp"

namespace distill {

struct BcConfig {
  int num_demos = 30;
  double ridge = 0.1;
  int validation_episodes = 30;
};

struct DaggerConfig {
  int iterations = 10;
  int episodes_per_iter = 4;
  int num_demos = 30;
  double ridge = 0.1;
  int validation_episodes = 30;
};

struct CritiqConfig {
  int iterations = 10;
  int episodes_per_iter = 4;
  int num_demos = 30;
  double kappa = 0.5;
  /// Weight of the discriminator bonus in the student objective.
  double lambda_reg = 0.1;
  double ridge = 0.1;
  double discriminator_smoothing = 1.0;
  int validation_episodes = 30;
  /// Aggregate the whole teacher recovery rollout from each critical state
  /// instead of the single correction.
  bool aggregate_recovery = false;
  /// Optional well-trained threshold on the training 0-1 error; iterations
  /// below it are flagged in the log.
  std::optional<double> alpha_welltrained;
};

void validate(const DaggerConfig& cfg);
void validate(const CritiqConfig& cfg);

struct TrainResult {
  TabularPolicy policy{1};
  std::vector<IterationLog> logs;
  AggDataset dataset{1};
  /// Index into logs of the returned policy.
  int best_iteration = 0;
  /// Queried privileged states per iteration (index 0 is the BC stage).
  std::vector<std::vector<PrivilegedState>> queried;
};

/// Teacher demonstrations from sampled-context initial states.
AggDataset collect_demos(const ContextualMdp& env, const TeacherPolicy& tp, int num_demos,
                         RngStream rng);

TrainResult run_bc(const ContextualMdp& env, const TeacherPolicy& tp, const BcConfig& cfg,
                   RngStream rng);

/// Rolls out the student, labels every visited state, and refits.
struct DaggerStep {
  TabularPolicy policy;
  AggDataset dataset;
  IterationLog log;
  std::vector<PrivilegedState> queried;
};
DaggerStep run_dagger_iteration(const ContextualMdp& env, const TeacherPolicy& tp,
                                const TabularPolicy& policy, const AggDataset& ds,
                                const DaggerConfig& cfg, int iteration, RngStream rng);

TrainResult run_dagger(const ContextualMdp& env, const TeacherPolicy& tp, const DaggerConfig& cfg,
                       RngStream rng);

/// States of `rollouts` whose observation the discriminator flags as
/// critical, in visiting order.
std::vector<PrivilegedState> critical_states(const std::vector<Trajectory>& rollouts,
                                             const Discriminator& disc);

/// Adds lambda x (mean teacher-likeness of the successor observation over
/// the contexts consistent with `obs`) to each action's logit, for every
/// listed observation.
void apply_discriminator_bonus(TabularPolicy& policy, const ContextualMdp& env,
                               const Discriminator& disc, double lambda,
                               const std::set<Observation>& observations);

TrainResult run_critiq(const ContextualMdp& env, const TeacherPolicy& tp, const CritiqConfig& cfg,
                       RngStream rng);

/// Greedy validation of a policy; shared by all trainers so iterations are
/// compared on identical episodes.
EvalReport validate_policy(const ContextualMdp& env, const ObservationPolicy& policy,
                           int episodes, const RngStream& rng);

}  // namespace distill
