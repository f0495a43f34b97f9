#include "distill/belief.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

namespace distill {

std::vector<double> belief_vector(const BeliefState& b, std::span<const double> prior) {
  std::vector<double> out(prior.size(), 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < prior.size(); ++c)
    if (b.support & (1u << c)) total += prior[c];
  if (total <= 0.0) throw ContractViolation("belief support carries no prior mass");
  for (std::size_t c = 0; c < prior.size(); ++c)
    if (b.support & (1u << c)) out[c] = prior[c] / total;
  return out;
}

std::optional<std::size_t> RealizablePolicy::find(const BeliefState& b) const {
  auto it = lookup_.find(b);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

DeterministicPolicy RealizablePolicy::observation_policy() const {
  DeterministicPolicy out(num_actions_);
  std::map<Observation, Action> seen;
  for (std::size_t i = 0; i < beliefs_.size(); ++i) {
    if (beliefs_[i].observation.done) continue;
    auto [it, inserted] = seen.emplace(beliefs_[i].observation, actions_[i]);
    if (!inserted && it->second != actions_[i])
      throw ContractViolation("belief is not a function of the observation");
    out.set(beliefs_[i].observation, actions_[i]);
  }
  return out;
}

RealizablePolicy solve_belief_mdp(const ContextualMdp& env, std::size_t cap, double tolerance) {
  if (env.num_contexts() > 31) throw CapExceeded("too many contexts for belief supports");
  const auto prior = env.context_prior();
  const int na = env.num_actions();

  RealizablePolicy rp;
  rp.num_actions_ = na;

  std::uint32_t all = 0;
  const Observation start = env.observe(env.initial(0));
  for (Context c = 0; c < env.num_contexts(); ++c) {
    if (env.observe(env.initial(c)) != start)
      throw ContractViolation("initial observation depends on the context");
    if (prior[c] > 0.0) all |= 1u << c;
  }

  std::deque<std::size_t> frontier;
  auto intern = [&](const BeliefState& b) -> std::size_t {
    auto it = rp.lookup_.find(b);
    if (it != rp.lookup_.end()) return it->second;
    if (rp.beliefs_.size() >= cap) throw CapExceeded("belief closure exceeded cap");
    const std::size_t id = rp.beliefs_.size();
    rp.lookup_.emplace(b, id);
    rp.beliefs_.push_back(b);
    rp.outcomes_.resize(rp.beliefs_.size() * na);
    frontier.push_back(id);
    return id;
  };
  intern(BeliefState{start, all});

  while (!frontier.empty()) {
    const std::size_t id = frontier.front();
    frontier.pop_front();
    const BeliefState b = rp.beliefs_[id];
    if (b.observation.done) continue;
    const auto weights = belief_vector(b, prior);
    const BaseState base{b.observation.node, b.observation.mask, b.observation.done};
    for (Action a = 0; a < na; ++a) {
      // Group contexts by what the student would see next.
      std::map<std::pair<Observation, bool>, std::pair<std::uint32_t, double>> groups;
      std::map<std::pair<Observation, bool>, double> rewards;
      for (Context c = 0; c < env.num_contexts(); ++c) {
        if (!(b.support & (1u << c))) continue;
        const Transition tr = env.step(PrivilegedState{c, base}, a);
        const auto key = std::make_pair(env.observe(tr.next), tr.terminal);
        auto& g = groups[key];
        g.first |= 1u << c;
        g.second += weights[c];
        rewards[key] += weights[c] * tr.reward;
      }
      std::vector<RealizablePolicy::Outcome> outs;
      for (const auto& [key, g] : groups) {
        RealizablePolicy::Outcome out;
        out.probability = g.second;
        out.reward = rewards[key] / g.second;
        out.next = key.second ? -1 : static_cast<long>(intern(BeliefState{key.first, g.first}));
        outs.push_back(out);
      }
      rp.outcomes_[id * na + a] = std::move(outs);
    }
  }

  const std::size_t n = rp.beliefs_.size();
  rp.values_.assign(n, 0.0);
  rp.q_.assign(n * na, 0.0);
  rp.actions_.assign(n, 0);
  auto backup = [&](std::size_t i, Action a) {
    double qa = 0.0;
    for (const auto& o : rp.outcomes_[i * na + a])
      qa += o.probability * (o.reward + (o.next < 0 ? 0.0 : env.gamma() * rp.values_[o.next]));
    return qa;
  };
  for (long sweep = 0;; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rp.beliefs_[i].observation.done) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (Action a = 0; a < na; ++a) best = std::max(best, backup(i, a));
      change = std::max(change, std::abs(best - rp.values_[i]));
      rp.values_[i] = best;
    }
    if (change < tolerance * 1e-2) break;
    if (sweep > 1'000'000) throw CapExceeded("belief value iteration did not converge");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (rp.beliefs_[i].observation.done) continue;
    for (Action a = 0; a < na; ++a) rp.q_[i * na + a] = backup(i, a);
    rp.actions_[i] = argmax_lowest(std::span<const double>(rp.q_).subspan(i * na, na));
  }
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rp.beliefs_[i].observation.done) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < na; ++a) {
      residual = std::max(residual, std::abs(rp.q_[i * na + a] - backup(i, a)));
      best = std::max(best, rp.q_[i * na + a]);
    }
    residual = std::max(residual, std::abs(best - rp.values_[i]));
  }
  rp.residual_ = residual;
  return rp;
}

DeltaReport bayes_error(const AggDataset& ds) {
  DeltaReport report;
  for (const auto& [obs, counts] : ds.label_counts()) {
    LocalDelta local;
    local.label_counts = counts;
    std::int64_t top = 0;
    int distinct = 0;
    for (auto n : counts) {
      local.total += n;
      top = std::max(top, n);
      if (n > 0) ++distinct;
    }
    local.mismatches = local.total - top;
    local.delta = static_cast<double>(local.mismatches) / static_cast<double>(local.total);
    report.mismatches += local.mismatches;
    report.total += local.total;
    if (distinct >= 2) report.aliased_set.push_back(obs);
    report.per_observation.emplace(obs, std::move(local));
  }
  if (report.total > 0)
    report.delta_total =
        static_cast<double>(report.mismatches) / static_cast<double>(report.total);
  return report;
}

int dataset_distance(const PrivilegedState& st, const AggDataset& ds, const ContextualMdp& env) {
  const int saturation = env.horizon();
  if (ds.contains(env.observe(st))) return 0;
  std::set<PrivilegedState> seen{st};
  std::vector<PrivilegedState> layer{st};
  for (int d = 1; d < saturation && !layer.empty(); ++d) {
    std::vector<PrivilegedState> next_layer;
    for (const auto& s : layer) {
      if (s.base.done) continue;
      for (Action a = 0; a < env.num_actions(); ++a) {
        const PrivilegedState nx = env.step(s, a).next;
        if (!seen.insert(nx).second) continue;
        if (!nx.base.done && ds.contains(env.observe(nx))) return d;
        next_layer.push_back(nx);
      }
    }
    layer = std::move(next_layer);
  }
  return saturation;
}

std::vector<CriticalCandidate> oracle_critical_states(const Trajectory& traj,
                                                      const AggDataset& ds,
                                                      const ContextualMdp& env,
                                                      const TeacherPolicy& tp, double lambda_d) {
  if (lambda_d < 0.0) throw ContractViolation("lambda_d must be non-negative");
  const double base_delta = bayes_error(ds).delta_total;
  std::vector<CriticalCandidate> out;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& step = traj.steps[t];
    const Transition tr = env.step(step.state, step.action);
    if (tr.terminal) continue;
    if (ds.contains(env.observe(tr.next))) continue;

    AggDataset augmented = ds;
    const Trajectory recovery = teacher_rollout_from(env, tp, step.state);
    for (const auto& r : recovery.steps)
      augmented.append(DatasetRecord{r.observation, r.action, r.state.context, -1});

    CriticalCandidate cand;
    cand.time = t;
    cand.state = step.state;
    cand.delta_increase = bayes_error(augmented).delta_total - base_delta;
    cand.distance = dataset_distance(step.state, ds, env);
    cand.score = cand.delta_increase + lambda_d * cand.distance;
    out.push_back(cand);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.score < b.score;
  });
  return out;
}

}  // namespace distill
