#include "distill/imitation.hpp"

#include <algorithm>
#include <cmath>

#include "distill/belief.hpp"

namespace distill {

void validate(const DaggerConfig& cfg) {
  if (cfg.iterations < 0) throw std::invalid_argument("dagger.iterations must be >= 0");
  if (cfg.episodes_per_iter < 1) throw std::invalid_argument("dagger.episodes_per_iter must be >= 1");
  if (cfg.num_demos < 1) throw std::invalid_argument("dagger.num_demos must be >= 1");
  if (!(cfg.ridge >= 0.0)) throw std::invalid_argument("dagger.ridge must be >= 0");
  if (cfg.validation_episodes < 1) throw std::invalid_argument("dagger.validation_episodes must be >= 1");
}

void validate(const CritiqConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("critiq.iterations must be >= 1");
  if (cfg.episodes_per_iter < 1) throw std::invalid_argument("critiq.episodes_per_iter must be >= 1");
  if (cfg.num_demos < 1) throw std::invalid_argument("critiq.num_demos must be >= 1");
  if (!(cfg.kappa > 0.0 && cfg.kappa < 1.0)) throw std::invalid_argument("critiq.kappa must lie in (0, 1)");
  if (!(cfg.lambda_reg >= 0.0)) throw std::invalid_argument("critiq.lambda_reg must be >= 0");
  if (!(cfg.ridge >= 0.0)) throw std::invalid_argument("critiq.ridge must be >= 0");
  if (!(cfg.discriminator_smoothing >= 0.0))
    throw std::invalid_argument("critiq.discriminator_smoothing must be >= 0");
  if (cfg.validation_episodes < 1) throw std::invalid_argument("critiq.validation_episodes must be >= 1");
}

EvalReport validate_policy(const ContextualMdp& env, const ObservationPolicy& policy,
                           int episodes, const RngStream& rng) {
  EvalOptions options;
  options.exact = false;
  return evaluate(env, policy, episodes, rng, options);
}

AggDataset collect_demos(const ContextualMdp& env, const TeacherPolicy& tp, int num_demos,
                         RngStream rng) {
  AggDataset ds(env.num_actions());
  for (int d = 0; d < num_demos; ++d) {
    const Context c = sample_context(env, rng);
    const Trajectory traj = teacher_rollout_from(env, tp, env.initial(c));
    for (const auto& step : traj.steps)
      ds.append(DatasetRecord{step.observation, step.action, c, 0});
  }
  return ds;
}

namespace {

struct Tracker {
  int best = 0;
  double best_success = -1.0;
  double best_return = -1.0;

  bool offer(int iteration, const EvalReport& report) {
    if (report.success_rate > best_success ||
        (report.success_rate == best_success && report.mean_return > best_return)) {
      best = iteration;
      best_success = report.success_rate;
      best_return = report.mean_return;
      return true;
    }
    return false;
  }
};

void fill_validation(IterationLog& log, const EvalReport& report) {
  log.validation_success = report.success_rate;
  log.validation_return = report.mean_return;
  log.exploration = report.exploration;
}

void fill_delta(IterationLog& log, const AggDataset& ds) {
  const DeltaReport delta = bayes_error(ds);
  log.dataset_size = static_cast<std::int64_t>(ds.size());
  log.delta_total = delta.delta_total;
  log.delta_mismatches = delta.mismatches;
  log.delta_count = delta.total;
}

std::vector<Trajectory> student_rollouts(const ContextualMdp& env, const ObservationPolicy& policy,
                                         int episodes, RngStream rng) {
  std::vector<Trajectory> out;
  out.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    RngStream episode = rng.child(static_cast<std::uint64_t>(e));
    RngStream context_stream = episode.child("context");
    RngStream policy_stream = episode.child("policy");
    const Context c = sample_context(env, context_stream);
    out.push_back(rollout(env, policy, env.initial(c), policy_stream));
  }
  return out;
}

std::vector<Observation> observations_of(const std::vector<Trajectory>& rollouts) {
  std::vector<Observation> out;
  for (const auto& t : rollouts)
    for (const auto& s : t.steps) out.push_back(s.observation);
  return out;
}

std::vector<Observation> observations_of(const AggDataset& ds) {
  std::vector<Observation> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records()) out.push_back(r.observation);
  return out;
}

}  // namespace

TrainResult run_bc(const ContextualMdp& env, const TeacherPolicy& tp, const BcConfig& cfg,
                   RngStream rng) {
  if (cfg.num_demos < 1) throw std::invalid_argument("bc.num_demos must be >= 1");
  TrainResult result;
  result.dataset = collect_demos(env, tp, cfg.num_demos, rng.child("demos"));
  result.policy = bc_fit(result.dataset, cfg.ridge);
  IterationLog log;
  log.iteration = 0;
  log.queries_made = static_cast<std::int64_t>(result.dataset.size());
  fill_delta(log, result.dataset);
  log.train_loss = cross_entropy(result.dataset, result.policy);
  log.epsilon_min = log.train_loss;
  fill_validation(log, validate_policy(env, result.policy, cfg.validation_episodes,
                                       rng.child("validation")));
  result.logs.push_back(log);
  result.queried.emplace_back();
  return result;
}

DaggerStep run_dagger_iteration(const ContextualMdp& env, const TeacherPolicy& tp,
                                const TabularPolicy& policy, const AggDataset& ds,
                                const DaggerConfig& cfg, int iteration, RngStream rng) {
  DaggerStep out{policy, ds, {}, {}};
  const auto rollouts = student_rollouts(env, policy, cfg.episodes_per_iter, rng);
  for (const auto& traj : rollouts) {
    for (const auto& step : traj.steps) {
      out.dataset.append(DatasetRecord{step.observation, tp.action(step.state),
                                       step.state.context, iteration});
      out.queried.push_back(step.state);
    }
  }
  out.policy = bc_fit(out.dataset, cfg.ridge);
  out.log.iteration = iteration;
  out.log.queries_made = static_cast<std::int64_t>(out.queried.size());
  fill_delta(out.log, out.dataset);
  out.log.train_loss = cross_entropy(out.dataset, out.policy);
  return out;
}

TrainResult run_dagger(const ContextualMdp& env, const TeacherPolicy& tp, const DaggerConfig& cfg,
                       RngStream rng) {
  validate(cfg);
  BcConfig bc{cfg.num_demos, cfg.ridge, cfg.validation_episodes};
  TrainResult result = run_bc(env, tp, bc, rng);
  const RngStream validation = rng.child("validation");
  Tracker tracker;
  tracker.offer(0, validate_policy(env, result.policy, cfg.validation_episodes, validation));
  std::vector<TabularPolicy> snapshots{result.policy};
  TabularPolicy policy = result.policy;
  AggDataset ds = result.dataset;
  double eps_min = *result.logs[0].train_loss;
  for (int i = 1; i <= cfg.iterations; ++i) {
    DaggerStep step = run_dagger_iteration(env, tp, policy, ds, cfg, i,
                                           rng.child("rollouts").child(static_cast<std::uint64_t>(i)));
    policy = std::move(step.policy);
    ds = std::move(step.dataset);
    eps_min = std::min(eps_min, *step.log.train_loss);
    step.log.epsilon_min = eps_min;
    const EvalReport report = validate_policy(env, policy, cfg.validation_episodes, validation);
    fill_validation(step.log, report);
    tracker.offer(i, report);
    result.logs.push_back(step.log);
    result.queried.push_back(std::move(step.queried));
    snapshots.push_back(policy);
  }
  result.policy = snapshots[tracker.best];
  result.best_iteration = tracker.best;
  result.dataset = std::move(ds);
  return result;
}

std::vector<PrivilegedState> critical_states(const std::vector<Trajectory>& rollouts,
                                             const Discriminator& disc) {
  std::vector<PrivilegedState> out;
  for (const auto& traj : rollouts)
    for (const auto& step : traj.steps)
      if (disc.is_critical(step.observation)) out.push_back(step.state);
  return out;
}

void apply_discriminator_bonus(TabularPolicy& policy, const ContextualMdp& env,
                               const Discriminator& disc, double lambda,
                               const std::set<Observation>& observations) {
  if (lambda == 0.0) return;
  for (const auto& obs : observations) {
    if (obs.done) continue;
    const BaseState base{obs.node, obs.mask, obs.done};
    std::vector<double> bonus(env.num_actions(), 0.0);
    int consistent = 0;
    for (Context c = 0; c < env.num_contexts(); ++c) {
      const PrivilegedState s{c, base};
      if (!env.is_valid(s)) continue;
      ++consistent;
      for (Action a = 0; a < env.num_actions(); ++a) {
        const Transition tr = env.step(s, a);
        // Reaching the goal is as teacher-like as it gets.
        bonus[a] += tr.terminal ? 1.0 : disc.score(env.observe(tr.next));
      }
    }
    if (consistent == 0) continue;
    auto& row = policy.row(obs);
    for (Action a = 0; a < env.num_actions(); ++a) row[a] += lambda * bonus[a] / consistent;
  }
}

TrainResult run_critiq(const ContextualMdp& env, const TeacherPolicy& tp, const CritiqConfig& cfg,
                       RngStream rng) {
  validate(cfg);
  BcConfig bc{cfg.num_demos, cfg.ridge, cfg.validation_episodes};
  TrainResult result = run_bc(env, tp, bc, rng);
  const RngStream validation = rng.child("validation");
  Tracker tracker;
  tracker.offer(0, validate_policy(env, result.policy, cfg.validation_episodes, validation));

  AggDataset ds = result.dataset;
  TabularPolicy policy = result.policy;
  std::vector<TabularPolicy> snapshots{policy};

  // Initial discriminator: teacher-labelled data against the BC student.
  Discriminator disc(cfg.kappa, cfg.discriminator_smoothing);
  {
    const auto first = student_rollouts(env, policy, cfg.episodes_per_iter, rng.child("disc-init"));
    disc = train_discriminator(disc, observations_of(ds), observations_of(first));
  }

  double eps_min = *result.logs[0].train_loss;
  for (int i = 1; i <= cfg.iterations; ++i) {
    const auto rollouts = student_rollouts(
        env, policy, cfg.episodes_per_iter, rng.child("rollouts").child(static_cast<std::uint64_t>(i)));
    const auto critical = critical_states(rollouts, disc);
    std::int64_t queries = 0;
    for (const auto& s : critical) {
      if (cfg.aggregate_recovery) {
        const Trajectory recovery = teacher_rollout_from(env, tp, s);
        for (const auto& r : recovery.steps)
          ds.append(DatasetRecord{r.observation, r.action, s.context, i});
      } else {
        ds.append(DatasetRecord{env.observe(s), tp.action(s), s.context, i});
      }
      ++queries;
    }

    // Student update: cross-entropy refit plus the discriminator bonus.
    policy = bc_fit(ds, cfg.ridge);
    std::set<Observation> touched = ds.support();
    for (const auto& traj : rollouts)
      for (const auto& step : traj.steps) touched.insert(step.observation);
    apply_discriminator_bonus(policy, env, disc, cfg.lambda_reg, touched);

    // Discriminator update against this iteration's student.
    disc = train_discriminator(disc, observations_of(ds), observations_of(rollouts));

    IterationLog log;
    log.iteration = i;
    log.queries_made = queries;
    fill_delta(log, ds);
    double mean_g = 0.0;
    for (const auto& traj : rollouts) mean_g += disc.trajectory_score(traj);
    mean_g /= static_cast<double>(rollouts.size());
    const double ce = cross_entropy(ds, policy);
    log.train_loss = ce - cfg.lambda_reg * mean_g;
    eps_min = std::min(eps_min, ce);
    log.epsilon_min = eps_min;
    log.train_error = epsilon_decomposition(ds, policy).epsilon;
    if (cfg.alpha_welltrained) log.well_trained = *log.train_error < *cfg.alpha_welltrained;
    const EvalReport report = validate_policy(env, policy, cfg.validation_episodes, validation);
    fill_validation(log, report);
    tracker.offer(i, report);
    result.logs.push_back(log);
    result.queried.push_back(critical);
    snapshots.push_back(policy);
  }
  result.policy = snapshots[tracker.best];
  result.best_iteration = tracker.best;
  result.dataset = std::move(ds);
  return result;
}

}  // namespace distill
