#include "distill/reinforce.hpp"

#include <algorithm>
#include <cmath>

#include "distill/belief.hpp"
#include "distill/store.hpp"

namespace distill {

LogitGradient pg_gradient(const TabularPolicy& policy, const std::vector<Trajectory>& batch,
                          const PgConfig& cfg) {
  if (batch.empty()) throw ContractViolation("pg_gradient: empty batch");
  const std::uint64_t snapshot = policy.fingerprint();
  std::size_t longest = 0;
  for (const auto& traj : batch) {
    if (traj.policy_fingerprint != snapshot)
      throw ContractViolation("pg_gradient: trajectory was generated by another policy snapshot");
    longest = std::max(longest, traj.steps.size());
  }

  // Discounted return-to-go per episode and step.
  std::vector<std::vector<double>> to_go(batch.size());
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const auto& steps = batch[e].steps;
    to_go[e].assign(steps.size(), 0.0);
    double g = 0.0;
    for (std::size_t t = steps.size(); t-- > 0;) {
      g = steps[t].reward + cfg.gamma * g;
      to_go[e][t] = g;
    }
  }
  std::vector<double> baseline(longest, 0.0);
  if (cfg.baseline == Baseline::mean_return) {
    std::vector<int> alive(longest, 0);
    for (std::size_t e = 0; e < batch.size(); ++e)
      for (std::size_t t = 0; t < to_go[e].size(); ++t) {
        baseline[t] += to_go[e][t];
        ++alive[t];
      }
    for (std::size_t t = 0; t < longest; ++t) baseline[t] /= alive[t];
  }

  const int na = policy.num_actions();
  const double scale = 1.0 / static_cast<double>(batch.size());
  LogitGradient grad;
  std::vector<double> probs(na);
  for (std::size_t e = 0; e < batch.size(); ++e) {
    double discount = 1.0;
    for (std::size_t t = 0; t < batch[e].steps.size(); ++t) {
      const auto& step = batch[e].steps[t];
      const double weight = scale * discount * (to_go[e][t] - baseline[t]);
      discount *= cfg.gamma;
      if (weight == 0.0) continue;
      policy.probabilities(step.observation, probs);
      auto& g = grad.try_emplace(step.observation, std::vector<double>(na, 0.0)).first->second;
      for (int k = 0; k < na; ++k)
        g[k] += weight * ((k == step.action ? 1.0 : 0.0) - probs[k]) / policy.temperature();
    }
  }
  return grad;
}

TabularPolicy pg_update(const TabularPolicy& policy, const std::vector<Trajectory>& batch,
                        const PgConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ContractViolation("learning rate must be positive");
  const LogitGradient grad = pg_gradient(policy, batch, cfg);
  TabularPolicy out = policy;
  for (const auto& [obs, g] : grad) {
    auto& row = out.row(obs);
    for (std::size_t k = 0; k < g.size(); ++k) row[k] += cfg.learning_rate * g[k];
  }
  return out;
}

PrivilegedState ResetPool::sample(const ContextualMdp& env, RngStream& rng) const {
  const double u = rng.uniform();
  if (u < mix && !teacher_states.empty()) return teacher_states[rng.index(teacher_states.size())];
  return env.initial(sample_context(env, rng));
}

std::map<Observation, double> ResetPool::observation_distribution(const ContextualMdp& env) const {
  std::map<Observation, double> dist;
  const double w_pool = teacher_states.empty() ? 0.0 : mix;
  if (w_pool > 0.0) {
    const double each = w_pool / static_cast<double>(teacher_states.size());
    for (const auto& s : teacher_states) dist[env.observe(s)] += each;
  }
  const auto prior = env.context_prior();
  for (Context c = 0; c < env.num_contexts(); ++c)
    if (prior[c] > 0.0) dist[env.observe(env.initial(c))] += (1.0 - w_pool) * prior[c];
  return dist;
}

nlohmann::json reset_pool_to_json(const ResetPool& pool) {
  nlohmann::json teacher = nlohmann::json::array();
  nlohmann::json student = nlohmann::json::array();
  for (const auto& s : pool.teacher_states) teacher.push_back(state_to_json(s));
  for (const auto& s : pool.student_states) student.push_back(state_to_json(s));
  return nlohmann::json{{"format", "distill.reset_pool"},
                        {"version", kStoreVersion},
                        {"mix", pool.mix},
                        {"teacher_states", std::move(teacher)},
                        {"student_states", std::move(student)}};
}

ResetPool reset_pool_from_json(const nlohmann::json& doc) {
  check_header(doc, "distill.reset_pool");
  ResetPool pool;
  try {
    pool.mix = doc.at("mix").get<double>();
    for (const auto& s : doc.at("teacher_states")) pool.teacher_states.push_back(state_from_json(s));
    for (const auto& s : doc.at("student_states")) pool.student_states.push_back(state_from_json(s));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad reset pool document: ") + e.what());
  }
  return pool;
}

void validate(const RetryConfig& cfg) {
  if (cfg.iterations < 0) throw std::invalid_argument("retry.iterations must be >= 0");
  if (cfg.episodes_per_iter < 1) throw std::invalid_argument("retry.episodes_per_iter must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("retry.learning_rate must be > 0");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("retry.gamma must lie in [0, 1]");
  if (!(cfg.mix >= 0.0 && cfg.mix <= 1.0)) throw std::invalid_argument("retry.mix must lie in [0, 1]");
  if (cfg.initial_teacher_rollouts < 0 || cfg.teacher_rollouts_per_iter < 0)
    throw std::invalid_argument("retry.initial_teacher_rollouts and retry.teacher_rollouts_per_iter must be >= 0");
  if (cfg.validation_episodes < 1) throw std::invalid_argument("retry.validation_episodes must be >= 1");
  if (!(cfg.ratio_smoothing >= 0.0)) throw std::invalid_argument("retry.ratio_smoothing must be >= 0");
}

namespace {

RetryResult train_with_resets(const ContextualMdp& env, const TeacherPolicy* tp,
                              const RetryConfig& cfg, RngStream rng) {
  validate(cfg);
  PgConfig pg{cfg.learning_rate, cfg.gamma > 0.0 ? cfg.gamma : env.gamma(), cfg.baseline};

  RetryResult result;
  result.pool.mix = tp ? cfg.mix : 0.0;
  if (tp) {
    RngStream init = rng.child("teacher-init");
    for (int k = 0; k < cfg.initial_teacher_rollouts; ++k) {
      const Trajectory traj =
          teacher_rollout_from(env, *tp, env.initial(sample_context(env, init)));
      for (const auto& step : traj.steps) result.pool.teacher_states.push_back(step.state);
    }
  }

  // Visitation of the optimal realizable policy, for the density-ratio trace.
  std::optional<std::map<Observation, double>> target;
  if (cfg.ratio_smoothing > 0.0) {
    try {
      const RealizablePolicy rp = solve_belief_mdp(env);
      target = exact_visitation(ExactModel::build(env), rp.observation_policy());
    } catch (const CapExceeded&) {
      target.reset();
    }
  }

  TabularPolicy policy(env.num_actions());
  const RngStream validation = rng.child("validation");
  std::vector<TabularPolicy> snapshots{policy};
  int best = 0;
  double best_success = -1.0, best_return = -1.0;
  auto offer = [&](int i, const EvalReport& r) {
    if (r.success_rate > best_success ||
        (r.success_rate == best_success && r.mean_return > best_return)) {
      best = i;
      best_success = r.success_rate;
      best_return = r.mean_return;
    }
  };

  auto base_log = [&](int i, const EvalReport& r) {
    IterationLog log;
    log.iteration = i;
    log.validation_success = r.success_rate;
    log.validation_return = r.mean_return;
    log.exploration = r.exploration;
    log.reset_teacher_states = static_cast<std::int64_t>(result.pool.teacher_states.size());
    log.reset_student_states = static_cast<std::int64_t>(result.pool.student_states.size());
    std::set<Observation> distinct;
    for (const auto& s : result.pool.teacher_states) distinct.insert(env.observe(s));
    log.teacher_pool_observations = static_cast<std::int64_t>(distinct.size());
    if (target)
      log.density_ratio =
          density_ratio(result.pool.observation_distribution(env), *target, cfg.ratio_smoothing)
              .sup_ratio;
    return log;
  };

  {
    const EvalReport r = validate_policy(env, policy, cfg.validation_episodes, validation);
    offer(0, r);
    result.logs.push_back(base_log(0, r));
  }

  for (int i = 1; i <= cfg.iterations; ++i) {
    RngStream it = rng.child("iteration").child(static_cast<std::uint64_t>(i));
    RngStream reset_stream = it.child("reset");
    RngStream episode_stream = it.child("episode");
    const std::optional<double> ratio_before =
        target ? std::optional<double>(density_ratio(result.pool.observation_distribution(env),
                                                     *target, cfg.ratio_smoothing)
                                           .sup_ratio)
               : std::nullopt;

    std::vector<Trajectory> batch;
    std::vector<PrivilegedState> visited;
    double batch_return = 0.0;
    for (int e = 0; e < cfg.episodes_per_iter; ++e) {
      const PrivilegedState start = result.pool.sample(env, reset_stream);
      RngStream policy_stream = episode_stream.child(static_cast<std::uint64_t>(e));
      batch.push_back(rollout(env, policy, start, policy_stream));
      batch_return += discounted_return(batch.back(), pg.gamma);
      for (const auto& step : batch.back().steps) visited.push_back(step.state);
    }
    result.pool.student_states.insert(result.pool.student_states.end(), visited.begin(),
                                      visited.end());
    policy = pg_update(policy, batch, pg);

    if (tp && !visited.empty()) {
      RngStream pick = it.child("teacher");
      for (int k = 0; k < cfg.teacher_rollouts_per_iter; ++k) {
        const PrivilegedState from = visited[pick.index(visited.size())];
        const Trajectory traj = teacher_rollout_from(env, *tp, from);
        for (const auto& step : traj.steps) result.pool.teacher_states.push_back(step.state);
      }
    }

    const EvalReport r = validate_policy(env, policy, cfg.validation_episodes, validation);
    offer(i, r);
    IterationLog log = base_log(i, r);
    log.density_ratio = ratio_before;
    log.batch_mean_return = batch_return / cfg.episodes_per_iter;
    result.logs.push_back(log);
    snapshots.push_back(policy);
  }
  result.policy = snapshots[best];
  result.best_iteration = best;
  return result;
}

}  // namespace

RetryResult run_retry(const ContextualMdp& env, const TeacherPolicy& tp, const RetryConfig& cfg,
                      RngStream rng) {
  return train_with_resets(env, &tp, cfg, rng);
}

RetryResult run_plain_rl(const ContextualMdp& env, const RetryConfig& cfg, RngStream rng) {
  return train_with_resets(env, nullptr, cfg, rng);
}

}  // namespace distill
