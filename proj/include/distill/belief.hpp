#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "distill/cmdp.hpp"
#include "distill/dataset.hpp"
#include "distill/policy.hpp"
#include "distill/teacher.hpp"

namespace distill {

/// Student information state: current observation plus the set of contexts
/// still consistent with everything revealed so far. With deterministic
/// revelation the belief is the prior restricted to `support`.
struct BeliefState {
  Observation observation;
  std::uint32_t support = 0;

  auto operator<=>(const BeliefState&) const = default;
};

std::vector<double> belief_vector(const BeliefState& b, std::span<const double> prior);

/// Optimal policy over belief states, solved exactly by value iteration.
class RealizablePolicy {
 public:
  struct Outcome {
    double probability = 0.0;
    double reward = 0.0;
    /// Successor belief index, or -1 when the branch terminates.
    long next = -1;
  };

  const std::vector<BeliefState>& beliefs() const { return beliefs_; }
  std::optional<std::size_t> find(const BeliefState& b) const;
  std::size_t initial() const { return 0; }
  int num_actions() const { return num_actions_; }

  Action action(std::size_t belief) const { return actions_[belief]; }
  double value(std::size_t belief) const { return values_[belief]; }
  double q(std::size_t belief, Action a) const { return q_[belief * num_actions_ + a]; }
  /// A^{pi_opt}(b, a) = Q(b, a) - V(b).
  double advantage(std::size_t belief, Action a) const { return q(belief, a) - value(belief); }
  const std::vector<Outcome>& outcomes(std::size_t belief, Action a) const {
    return outcomes_[belief * num_actions_ + a];
  }

  /// J_opt: optimal realizable return from the initial belief.
  double optimal_return() const { return values_[0]; }
  double residual() const { return residual_; }

  /// Observation-indexed view. Throws when two beliefs sharing an
  /// observation disagree on the action.
  DeterministicPolicy observation_policy() const;

 private:
  friend RealizablePolicy solve_belief_mdp(const ContextualMdp&, std::size_t, double);
  int num_actions_ = 0;
  std::vector<BeliefState> beliefs_;
  std::map<BeliefState, std::size_t> lookup_;
  std::vector<std::vector<Outcome>> outcomes_;
  std::vector<double> values_;
  std::vector<double> q_;
  std::vector<Action> actions_;
  double residual_ = 0.0;
};

RealizablePolicy solve_belief_mdp(const ContextualMdp& env, std::size_t cap = 1'000'000,
                                  double tolerance = 1e-10);

struct LocalDelta {
  std::vector<std::int64_t> label_counts;
  std::int64_t total = 0;
  /// total - max label count.
  std::int64_t mismatches = 0;
  double delta = 0.0;
};

/// Empirical Bayes error of a labelled dataset: the 0-1 loss floor of any
/// context-free policy.
struct DeltaReport {
  double delta_total = 0.0;
  std::int64_t mismatches = 0;
  std::int64_t total = 0;
  std::map<Observation, LocalDelta> per_observation;
  std::vector<Observation> aliased_set;
};

DeltaReport bayes_error(const AggDataset& ds);

/// Steps (any actions, context fixed) from `st` to the nearest state whose
/// observation is in the dataset. Saturates at the horizon.
int dataset_distance(const PrivilegedState& st, const AggDataset& ds, const ContextualMdp& env);

struct CriticalCandidate {
  std::size_t time = 0;
  PrivilegedState state;
  double delta_increase = 0.0;
  int distance = 0;
  double score = 0.0;
};

/// Scores every trajectory state whose taken transition leaves the dataset
/// support by (aliasing added by a teacher recovery from it) + lambda_d x
/// distance-to-dataset, and ranks ascending with earliest time on ties.
std::vector<CriticalCandidate> oracle_critical_states(const Trajectory& traj,
                                                      const AggDataset& ds,
                                                      const ContextualMdp& env,
                                                      const TeacherPolicy& tp, double lambda_d);

}  // namespace distill
