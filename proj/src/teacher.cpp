#include "distill/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace distill {

Action argmax_lowest(std::span<const double> values, double tie_tolerance) {
  if (values.empty()) throw ContractViolation("argmax over an empty row");
  Action best = 0;
  for (std::size_t a = 1; a < values.size(); ++a)
    if (values[a] > values[best] + tie_tolerance) best = static_cast<Action>(a);
  return best;
}

TeacherPolicy::TeacherPolicy(StateIndex index, int num_actions, std::vector<double> values,
                             std::vector<double> q, std::vector<Action> actions)
    : index_(std::move(index)),
      num_actions_(num_actions),
      values_(std::move(values)),
      q_(std::move(q)),
      actions_(std::move(actions)) {
  if (values_.size() != index_.size() || actions_.size() != index_.size() ||
      q_.size() != index_.size() * static_cast<std::size_t>(num_actions_))
    throw ContractViolation("teacher tables have inconsistent sizes");
}

Action TeacherPolicy::action(const PrivilegedState& s) const {
  auto i = index_.find(s);
  if (!i) throw ContractViolation("teacher queried at an unknown state");
  return actions_[*i];
}

double TeacherPolicy::value(const PrivilegedState& s) const {
  auto i = index_.find(s);
  if (!i) throw ContractViolation("teacher queried at an unknown state");
  return values_[*i];
}

double TeacherPolicy::q(const PrivilegedState& s, Action a) const {
  auto i = index_.find(s);
  if (!i || a < 0 || a >= num_actions_) throw ContractViolation("teacher Q lookup out of range");
  return q_[*i * num_actions_ + a];
}

double TeacherPolicy::bellman_residual(const ContextualMdp& env) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < index_.size(); ++i) {
    const auto& s = index_[i];
    double best = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < num_actions_; ++a) {
      double target = 0.0;
      if (!s.base.done) {
        const Transition tr = env.step(s, a);
        target = tr.reward + (tr.terminal ? 0.0 : env.gamma() * value(tr.next));
      }
      const double qa = q_[i * num_actions_ + a];
      worst = std::max(worst, std::abs(qa - target));
      best = std::max(best, qa);
    }
    worst = std::max(worst, std::abs(values_[i] - best));
  }
  return worst;
}

TeacherPolicy plan_teacher(const ContextualMdp& env, std::size_t cap, double tolerance) {
  StateIndex index(enumerate_states(env, cap));
  const std::size_t n = index.size();
  const int na = env.num_actions();

  // Successor table; -1 marks a terminal transition.
  std::vector<long> next(n * na, -1);
  std::vector<double> reward(n * na, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (index[i].base.done) continue;
    for (Action a = 0; a < na; ++a) {
      const Transition tr = env.step(index[i], a);
      reward[i * na + a] = tr.reward;
      if (!tr.terminal) next[i * na + a] = static_cast<long>(index.at(tr.next));
    }
  }

  std::vector<double> v(n, 0.0);
  std::vector<double> q(n * na, 0.0);
  for (int sweep = 0;; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (index[i].base.done) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (Action a = 0; a < na; ++a) {
        const long j = next[i * na + a];
        const double qa = reward[i * na + a] + (j < 0 ? 0.0 : env.gamma() * v[j]);
        q[i * na + a] = qa;
        best = std::max(best, qa);
      }
      change = std::max(change, std::abs(best - v[i]));
      v[i] = best;
    }
    if (change < tolerance * 1e-2) break;
    if (sweep > 1'000'000) throw CapExceeded("teacher value iteration did not converge");
  }
  // Final Q sweep against the converged values.
  std::vector<Action> actions(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (index[i].base.done) continue;
    for (Action a = 0; a < na; ++a) {
      const long j = next[i * na + a];
      q[i * na + a] = reward[i * na + a] + (j < 0 ? 0.0 : env.gamma() * v[j]);
    }
    actions[i] = argmax_lowest(std::span<const double>(q).subspan(i * na, na));
    v[i] = q[i * na + actions[i]];
  }
  return TeacherPolicy(std::move(index), na, std::move(v), std::move(q), std::move(actions));
}

Trajectory teacher_rollout_from(const ContextualMdp& env, const TeacherPolicy& tp,
                                const PrivilegedState& start) {
  if (!tp.index().find(start)) throw ContractViolation("teacher rollout from an unknown state");
  // The teacher is deterministic; the stream is only recorded.
  RngStream unused(0, "teacher");
  return rollout(env, tp, start, unused);
}

}  // namespace distill
