#include "distill/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "distill/exact.hpp"

namespace distill {

using nlohmann::json;

std::string to_string(ExplorationLevel level) {
  switch (level) {
    case ExplorationLevel::none:
      return "None";
    case ExplorationLevel::low:
      return "Low";
    case ExplorationLevel::medium:
      return "Medium";
    case ExplorationLevel::high:
      return "High";
  }
  return "?";
}

ExplorationLevel exploration_level(const ContextualMdp& env, const Trajectory& traj) {
  if (traj.success()) return ExplorationLevel::high;
  const int probed = env.goals_probed(traj.end);
  return static_cast<ExplorationLevel>(std::min(probed, 3));
}

void ExplorationHistogram::merge(const ExplorationHistogram& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

std::int64_t ExplorationHistogram::total() const {
  std::int64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

ExplorationLevel ExplorationHistogram::mode() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = i;
  return static_cast<ExplorationLevel>(best);
}

EvalReport evaluate(const ContextualMdp& env, const ObservationPolicy& policy, int n_episodes,
                    RngStream rng, const EvalOptions& options) {
  if (n_episodes < 1) throw ContractViolation("evaluate needs at least one episode");
  EvalReport report;
  report.episodes = n_episodes;
  report.seed = rng.id();
  GreedyPolicy greedy(policy);
  const ObservationPolicy& actor =
      options.mode == EvalMode::greedy ? static_cast<const ObservationPolicy&>(greedy) : policy;
  int successes = 0;
  double returns = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    RngStream episode = rng.child(static_cast<std::uint64_t>(e));
    RngStream context_stream = episode.child("context");
    RngStream policy_stream = episode.child("policy");
    const Context c = sample_context(env, context_stream);
    const Trajectory traj = rollout(env, actor, env.initial(c), policy_stream);
    if (traj.success()) ++successes;
    returns += discounted_return(traj, env.gamma());
    report.exploration.add(exploration_level(env, traj));
  }
  report.success_rate = static_cast<double>(successes) / n_episodes;
  report.mean_return = returns / n_episodes;
  if (options.exact) {
    report.exact_return = exact_return(ExactModel::build(env), actor);
    if (options.optimal_return) {
      report.optimal_return = options.optimal_return;
      report.regret = *options.optimal_return - *report.exact_return;
    }
  }
  return report;
}

namespace {

template <class T>
json optional_json(const std::optional<T>& x) {
  if (!x) return nullptr;
  if constexpr (std::is_floating_point_v<T>)
    return std::isfinite(*x) ? json(*x) : json(std::isnan(*x) ? "nan" : (*x > 0 ? "inf" : "-inf"));
  else
    return *x;
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (j.at(key).is_string()) {
      const auto s = j.at(key).get<std::string>();
      if (s == "inf") return std::numeric_limits<T>::infinity();
      if (s == "-inf") return -std::numeric_limits<T>::infinity();
      return std::numeric_limits<T>::quiet_NaN();
    }
  }
  return j.at(key).get<T>();
}

}  // namespace

json to_json(const IterationLog& log) {
  return json{{"schema", kIterationSchema},
              {"iteration", log.iteration},
              {"queries_made", log.queries_made},
              {"dataset_size", log.dataset_size},
              {"delta_total", log.delta_total},
              {"delta_mismatches", log.delta_mismatches},
              {"delta_count", log.delta_count},
              {"train_loss", optional_json(log.train_loss)},
              {"epsilon_min", optional_json(log.epsilon_min)},
              {"train_error", optional_json(log.train_error)},
              {"well_trained", optional_json(log.well_trained)},
              {"validation_success", log.validation_success},
              {"validation_return", log.validation_return},
              {"explore_none", log.exploration.counts[0]},
              {"explore_low", log.exploration.counts[1]},
              {"explore_medium", log.exploration.counts[2]},
              {"explore_high", log.exploration.counts[3]},
              {"reset_teacher_states", optional_json(log.reset_teacher_states)},
              {"reset_student_states", optional_json(log.reset_student_states)},
              {"teacher_pool_observations", optional_json(log.teacher_pool_observations)},
              {"density_ratio", optional_json(log.density_ratio)},
              {"batch_mean_return", optional_json(log.batch_mean_return)}};
}

IterationLog iteration_log_from_json(const json& j) {
  if (j.value("schema", std::string()) != kIterationSchema)
    throw std::runtime_error("iteration record has an unknown schema");
  IterationLog log;
  log.iteration = j.at("iteration").get<int>();
  log.queries_made = j.at("queries_made").get<std::int64_t>();
  log.dataset_size = j.at("dataset_size").get<std::int64_t>();
  log.delta_total = j.at("delta_total").get<double>();
  log.delta_mismatches = j.at("delta_mismatches").get<std::int64_t>();
  log.delta_count = j.at("delta_count").get<std::int64_t>();
  log.train_loss = optional_from<double>(j, "train_loss");
  log.epsilon_min = optional_from<double>(j, "epsilon_min");
  log.train_error = optional_from<double>(j, "train_error");
  log.well_trained = optional_from<bool>(j, "well_trained");
  log.validation_success = j.at("validation_success").get<double>();
  log.validation_return = j.at("validation_return").get<double>();
  log.exploration.counts = {j.at("explore_none").get<std::int64_t>(),
                            j.at("explore_low").get<std::int64_t>(),
                            j.at("explore_medium").get<std::int64_t>(),
                            j.at("explore_high").get<std::int64_t>()};
  log.reset_teacher_states = optional_from<std::int64_t>(j, "reset_teacher_states");
  log.reset_student_states = optional_from<std::int64_t>(j, "reset_student_states");
  log.teacher_pool_observations = optional_from<std::int64_t>(j, "teacher_pool_observations");
  log.density_ratio = optional_from<double>(j, "density_ratio");
  log.batch_mean_return = optional_from<double>(j, "batch_mean_return");
  return log;
}

json to_json(const EvalReport& r) {
  return json{{"schema", kEvalSchema},
              {"success_rate", r.success_rate},
              {"mean_return", r.mean_return},
              {"exact_return", optional_json(r.exact_return)},
              {"optimal_return", optional_json(r.optimal_return)},
              {"regret", optional_json(r.regret)},
              {"explore_none", r.exploration.counts[0]},
              {"explore_low", r.exploration.counts[1]},
              {"explore_medium", r.exploration.counts[2]},
              {"explore_high", r.exploration.counts[3]},
              {"exploration_mode", to_string(r.exploration.mode())},
              {"episodes", r.episodes},
              {"stream", r.seed}};
}

DeltaCurve delta_curve(const std::vector<IterationLog>& logs) {
  DeltaCurve curve;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    curve.values.push_back(logs[i].delta_total);
    if (i == 0) continue;
    curve.increments.push_back(logs[i].delta_total - logs[i - 1].delta_total);
    // a/b <= c/d  <=>  a*d <= c*b for positive denominators; empty sets are 0.
    const auto a = logs[i - 1].delta_mismatches, b = logs[i - 1].delta_count;
    const auto c = logs[i].delta_mismatches, d = logs[i].delta_count;
    const bool le = b == 0 ? true : (d == 0 ? a == 0 : a * d <= c * b);
    if (!le) curve.non_decreasing = false;
  }
  return curve;
}

EpsilonDecomposition epsilon_decomposition(const AggDataset& ds, const ObservationPolicy& policy,
                                           EvalMode mode) {
  EpsilonDecomposition out;
  out.delta = bayes_error(ds).delta_total;
  if (ds.empty()) return out;
  double disagreement = 0.0;
  std::vector<double> probs(policy.num_actions());
  for (const auto& r : ds.records()) {
    if (mode == EvalMode::greedy) {
      disagreement += policy.greedy(r.observation) == r.action ? 0.0 : 1.0;
    } else {
      policy.probabilities(r.observation, probs);
      disagreement += 1.0 - probs[r.action];
    }
  }
  out.epsilon = disagreement / static_cast<double>(ds.size());
  const double raw = out.epsilon - out.delta;
  out.epsilon_model = std::max(0.0, raw);
  out.clipped = out.epsilon_model - raw;
  return out;
}

RatioReport density_ratio(const std::map<Observation, double>& reset_dist,
                          const std::map<Observation, double>& target_dist, double smoothing) {
  if (!(smoothing > 0.0)) throw ContractViolation("density ratio smoothing must be positive");
  RatioReport report;
  report.smoothing = smoothing;
  double p_total = 0.0, q_total = 0.0;
  for (const auto& [o, p] : reset_dist) p_total += p;
  for (const auto& [o, q] : target_dist) q_total += q;
  if (!(p_total > 0.0) || !(q_total > 0.0))
    throw ContractViolation("density ratio needs two non-empty distributions");
  std::map<Observation, std::pair<double, double>> joint;
  for (const auto& [o, p] : reset_dist) joint[o].first = p / p_total;
  for (const auto& [o, q] : target_dist) joint[o].second = q / q_total;
  const double eta = smoothing;
  report.sup_ratio = 0.0;
  for (const auto& [o, pq] : joint) {
    const double ratio = (pq.first + eta) / (pq.second + eta);
    report.ratios[o] = ratio;
    report.sup_ratio = std::max(report.sup_ratio, ratio);
    if (pq.first > 0.0 && pq.second == 0.0) report.disjoint_support = true;
  }
  return report;
}

double advantage_sup(const RealizablePolicy& rp, const std::vector<std::size_t>& beliefs) {
  double worst = 0.0;
  for (auto b : beliefs) {
    if (rp.beliefs()[b].observation.done) continue;
    for (Action a = 0; a < rp.num_actions(); ++a) worst = std::max(worst, -rp.advantage(b, a));
  }
  return worst;
}

std::map<Observation, double> sampled_visitation(const ContextualMdp& env,
                                                 const ObservationPolicy& policy, int episodes,
                                                 RngStream rng) {
  std::map<Observation, double> visits;
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    RngStream episode = rng.child(static_cast<std::uint64_t>(e));
    RngStream context_stream = episode.child("context");
    RngStream policy_stream = episode.child("policy");
    const Trajectory traj =
        rollout(env, policy, env.initial(sample_context(env, context_stream)), policy_stream);
    for (const auto& step : traj.steps) {
      visits[step.observation] += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0)
    for (auto& [o, x] : visits) x /= total;
  return visits;
}

}  // namespace distill
