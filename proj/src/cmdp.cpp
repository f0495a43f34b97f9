#include "distill/cmdp.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace distill {

std::string Observation::to_string() const {
  std::ostringstream out;
  out << "node=" << node << " mask=" << mask;
  if (done) out << " done";
  return out.str();
}

std::size_t StateHash::operator()(const PrivilegedState& s) const noexcept {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(s.context));
  h = splitmix64(h ^ static_cast<std::uint64_t>(s.base.node));
  h = splitmix64(h ^ s.base.mask);
  return static_cast<std::size_t>(h ^ (s.base.done ? 1u : 0u));
}

std::size_t StateHash::operator()(const Observation& o) const noexcept {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(o.node));
  h = splitmix64(h ^ o.mask);
  return static_cast<std::size_t>(h ^ (o.done ? 1u : 0u));
}

ContextualMdp::ContextualMdp(double gamma, int horizon, std::vector<double> prior)
    : gamma_(gamma), horizon_(horizon), prior_(std::move(prior)) {
  if (!(gamma_ > 0.0 && gamma_ <= 1.0))
    throw std::invalid_argument("discount must lie in (0, 1]");
  if (horizon_ < 1) throw std::invalid_argument("horizon must be positive");
  if (prior_.empty()) throw std::invalid_argument("at least one context is required");
  double total = 0.0;
  for (double p : prior_) {
    if (!(p >= 0.0)) throw std::invalid_argument("context prior has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("context prior must sum to 1");
}

PrivilegedState ContextualMdp::initial(Context c) const {
  if (c < 0 || c >= num_contexts())
    throw ContractViolation("initial: unknown context " + std::to_string(c));
  return PrivilegedState{c, start_state()};
}

Observation ContextualMdp::observe(const PrivilegedState& s) const {
  if (!is_valid(s)) throw ContractViolation("observe: unknown state " + describe(s));
  return Observation{s.base.node, s.base.mask, s.base.done};
}

Transition ContextualMdp::step(const PrivilegedState& s, Action a) const {
  if (!is_valid(s)) throw ContractViolation("step: unknown state " + describe(s));
  if (a < 0 || a >= num_actions())
    throw ContractViolation("step: invalid action index " + std::to_string(a));
  if (s.base.done) return Transition{s, 0.0, true};
  return step_valid(s, a);
}

int ContextualMdp::goals_probed(const PrivilegedState& s) const {
  return std::popcount(s.base.mask) + (s.base.done ? 1 : 0);
}

std::vector<double> ContextualMdp::features(const Observation& o) const {
  // Bias, location, and one indicator per revealed goal.
  std::vector<double> f;
  f.push_back(1.0);
  f.push_back(static_cast<double>(o.node));
  for (int g = 0; g < num_contexts(); ++g) f.push_back((o.mask >> g) & 1u ? 1.0 : 0.0);
  return f;
}

std::string ContextualMdp::describe(const PrivilegedState& s) const {
  std::ostringstream out;
  out << "(c=" << s.context << ", node=" << s.base.node << ", mask=" << s.base.mask
      << (s.base.done ? ", done" : "") << ")";
  return out.str();
}

Context sample_context(const ContextualMdp& env, RngStream& rng) {
  return static_cast<Context>(rng.categorical(env.context_prior()));
}

bool Trajectory::success() const {
  return !steps.empty() && steps.back().terminal && steps.back().reward > 0.0;
}

Trajectory rollout(const ContextualMdp& env, const ActionSource& policy,
                   const PrivilegedState& start, RngStream& rng) {
  if (!env.is_valid(start)) throw ContractViolation("rollout: invalid start " + env.describe(start));
  Trajectory traj;
  traj.context = start.context;
  traj.seed = rng.id();
  traj.policy_fingerprint = policy.fingerprint();
  traj.start = start;
  PrivilegedState s = start;
  for (int t = 0; t < env.horizon() && !s.base.done; ++t) {
    const Observation o = env.observe(s);
    const Action a = policy.act(s, o, rng);
    if (a < 0 || a >= env.num_actions())
      throw ContractViolation("rollout: policy returned invalid action " + std::to_string(a));
    const Transition tr = env.step(s, a);
    traj.steps.push_back(TrajectoryStep{s, o, a, tr.reward, tr.terminal});
    s = tr.next;
    if (tr.terminal) break;
  }
  traj.end = s;
  return traj;
}

Trajectory replay(const ContextualMdp& env, const Trajectory& traj) {
  Trajectory out;
  out.context = traj.context;
  out.seed = traj.seed;
  out.policy_fingerprint = traj.policy_fingerprint;
  out.start = traj.start;
  PrivilegedState s = traj.start;
  for (const auto& step : traj.steps) {
    const Transition tr = env.step(s, step.action);
    out.steps.push_back(TrajectoryStep{s, env.observe(s), step.action, tr.reward, tr.terminal});
    s = tr.next;
    if (tr.terminal) break;
  }
  out.end = s;
  return out;
}

double discounted_return(const Trajectory& traj, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractViolation("discount must lie in (0, 1]");
  double total = 0.0;
  double weight = 1.0;
  for (const auto& step : traj.steps) {
    total += weight * step.reward;
    weight *= gamma;
  }
  return total;
}

}  // namespace distill
