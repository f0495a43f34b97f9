#pragma once

#include <vector>

#include "distill/cmdp.hpp"
#include "distill/environments.hpp"

namespace distill {

/// Privileged optimal policy obtained by value iteration on the full state.
///
/// Tables cover every reachable privileged state. The stored action attains
/// the maximum Q-value, with ties (within 1e-12) going to the lowest index.
class TeacherPolicy : public ActionSource {
 public:
  TeacherPolicy() = default;
  TeacherPolicy(StateIndex index, int num_actions, std::vector<double> values,
                std::vector<double> q, std::vector<Action> actions);

  Action action(const PrivilegedState& s) const;
  double value(const PrivilegedState& s) const;
  double q(const PrivilegedState& s, Action a) const;

  Action act(const PrivilegedState& s, const Observation&, RngStream&) const override {
    return action(s);
  }

  const StateIndex& index() const { return index_; }
  int num_actions() const { return num_actions_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& q_table() const { return q_; }
  const std::vector<Action>& actions() const { return actions_; }

  /// max over (s, a) of |Q(s,a) - (r + gamma V(s'))| and |V(s) - max_a Q(s,a)|.
  double bellman_residual(const ContextualMdp& env) const;

 private:
  StateIndex index_;
  int num_actions_ = 0;
  std::vector<double> values_;
  std::vector<double> q_;
  std::vector<Action> actions_;
};

TeacherPolicy plan_teacher(const ContextualMdp& env, std::size_t cap = 1'000'000,
                           double tolerance = 1e-10);

/// Follows the teacher from `start` until the success event or the horizon.
Trajectory teacher_rollout_from(const ContextualMdp& env, const TeacherPolicy& tp,
                                const PrivilegedState& start);

/// Greedy argmax with ties to the lowest index.
Action argmax_lowest(std::span<const double> values, double tie_tolerance = 1e-12);

}  // namespace distill
