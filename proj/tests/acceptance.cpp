// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "distill/belief.hpp"
#include "distill/discriminator.hpp"
#include "distill/environments.hpp"
#include "distill/exact.hpp"
#include "distill/harness.hpp"
#include "distill/imitation.hpp"
#include "distill/metrics.hpp"
#include "distill/reinforce.hpp"
#include "distill/teacher.hpp"

using namespace distill;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kOracleTol = 1e-9;
constexpr double kOracleSeconds = 5.0;
constexpr double kGradRelTol = 1e-6;
constexpr double kFdStep = 1e-5;
constexpr int kPgTrials = 100;
constexpr int kPgEpisodes = 256;
constexpr double kPgPositiveFraction = 0.95;
constexpr double kRetryMin = 0.95;
constexpr double kCritiqMin = 0.70;
constexpr double kBcMax = 0.60;
constexpr double kDaggerSlack = 0.05;
constexpr double kRlGap = 0.20;
constexpr int kSelectorInstances = 20;
const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};
constexpr int kEvalEpisodes = 100;

std::map<int, std::pair<bool, std::string>> results;

void report(int id, bool pass, const std::string& detail) { results[id] = {pass, detail}; }

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

EnvConfig line_cfg(int k) {
  EnvConfig ec;
  ec.num_goals = k;
  return ec;
}

ExperimentConfig default_experiment(Method m, EnvConfig env = line_cfg(3)) {
  ExperimentConfig cfg;
  cfg.method = m;
  cfg.env = env;
  cfg.seeds = kSeeds;
  cfg.eval_episodes = kEvalEpisodes;
  return cfg;
}

std::vector<SeedOutcome> run_all(const ExperimentConfig& cfg) {
  std::vector<SeedOutcome> out;
  for (auto s : cfg.seeds) out.push_back(run_seed(cfg, s));
  return out;
}

double mean_success(const std::vector<SeedOutcome>& runs) {
  std::vector<double> xs;
  for (const auto& r : runs) xs.push_back(r.eval.success_rate);
  return mean(xs);
}

// Exhaustive expectimax over (base state, consistent contexts, step).
double expectimax(const ContextualMdp& env) {
  std::map<std::tuple<int, std::uint32_t, std::vector<int>, int>, double> memo;
  std::function<double(const BaseState&, const std::vector<int>&, int)> value =
      [&](const BaseState& base, const std::vector<int>& support, int t) -> double {
    if (t >= env.horizon()) return 0.0;
    auto key = std::make_tuple(base.node, base.mask, support, t);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double best = -1.0;
    for (Action a = 0; a < env.num_actions(); ++a) {
      double total = 0.0;
      std::map<BaseState, std::vector<int>> groups;
      for (int c : support) {
        const Transition tr = env.step(PrivilegedState{c, base}, a);
        if (tr.terminal)
          total += tr.reward / support.size();
        else
          groups[tr.next.base].push_back(c);
      }
      for (const auto& [next, sub] : groups)
        total += env.gamma() * value(next, sub, t + 1) * sub.size() / support.size();
      best = std::max(best, total);
    }
    return memo[key] = best;
  };
  std::vector<int> all;
  for (int c = 0; c < env.num_contexts(); ++c) all.push_back(c);
  return value(env.initial(0).base, all, 0);
}

void criterion_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const EnvPtr env = make_env(line_cfg(3));
  const RealizablePolicy rp = solve_belief_mdp(*env);
  const double ex = expectimax(*env);
  const DeterministicPolicy pi = rp.observation_policy();
  int solved = 0;
  for (Context c = 0; c < env->num_contexts(); ++c) {
    RngStream r(1, "oracle");
    solved += rollout(*env, pi, env->initial(c), r).success();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double gap = std::abs(rp.optimal_return() - ex);
  report(1, gap < kOracleTol && solved == env->num_contexts() && secs < kOracleSeconds,
         "J_opt=" + fmt(rp.optimal_return(), 12) + " expectimax=" + fmt(ex, 12) +
             " |diff|=" + sci(gap) + " contexts solved " + std::to_string(solved) +
             "/3, " + fmt(secs, 3) + " s");
}

void criteria_imitation() {
  const auto dagger = run_all(default_experiment(Method::dagger));
  const auto critiq = run_all(default_experiment(Method::critiq));

  int monotone = 0;
  std::string where;
  for (const auto& r : dagger) {
    const DeltaCurve c = delta_curve(r.logs);
    monotone += c.non_decreasing;
    if (!c.non_decreasing) {
      for (std::size_t i = 0; i < c.increments.size(); ++i)
        if (r.logs[i + 1].delta_mismatches * r.logs[i].delta_count <
            r.logs[i].delta_mismatches * r.logs[i + 1].delta_count) {
          where += " seed " + std::to_string(r.seed) + " drops at iteration " +
                   std::to_string(r.logs[i + 1].iteration) + ";";
          break;
        }
    }
  }
  report(2, monotone == static_cast<int>(dagger.size()),
         std::to_string(monotone) + "/" + std::to_string(dagger.size()) +
             " DAgger runs with non-decreasing delta_total" + (where.empty() ? "" : ":" + where));

  bool fewer = true;
  int lower_delta = 0;
  std::string detail;
  for (std::size_t k = 0; k < kSeeds.size(); ++k) {
    for (std::size_t i = 1; i < dagger[k].logs.size(); ++i)
      if (critiq[k].logs[i].queries_made >= dagger[k].logs[i].queries_made) {
        fewer = false;
        detail += " (seed " + std::to_string(kSeeds[k]) + " iteration " + std::to_string(i) +
                  ": " + std::to_string(critiq[k].logs[i].queries_made) + " vs " +
                  std::to_string(dagger[k].logs[i].queries_made) + ")";
      }
    lower_delta += critiq[k].logs.back().delta_total < dagger[k].logs.back().delta_total;
  }
  report(3, fewer && lower_delta >= 4,
         std::string("queries fewer in every DAgger-stage iteration: ") + (fewer ? "yes" : "no") +
             detail + "; final delta lower in " + std::to_string(lower_delta) + "/5 seeds");
}

ExplorationHistogram final_third(const std::vector<IterationLog>& logs) {
  ExplorationHistogram h;
  const int last = logs.back().iteration;
  for (const auto& l : logs)
    if (3 * l.iteration > 2 * last) h.merge(l.exploration);
  return h;
}

void criteria_rl_and_success() {
  const double bc = mean_success(run_all(default_experiment(Method::bc)));
  const double dagger = mean_success(run_all(default_experiment(Method::dagger)));
  const double critiq = mean_success(run_all(default_experiment(Method::critiq)));
  const auto retry_runs = run_all(default_experiment(Method::retry));
  const auto plain_runs = run_all(default_experiment(Method::plain_rl));
  const double retry = mean_success(retry_runs);
  const double plain = mean_success(plain_runs);
  EnvConfig push = line_cfg(3);
  push.kind = EnvKind::push_line;
  const double push_plain = mean_success(run_all(default_experiment(Method::plain_rl, push)));

  std::vector<std::string> missed;
  if (!(retry >= kRetryMin)) missed.push_back("retry");
  if (!(critiq >= kCritiqMin)) missed.push_back("critiq");
  if (!(bc <= kBcMax)) missed.push_back("bc");
  if (!(dagger <= bc + kDaggerSlack)) missed.push_back("dagger<=bc+0.05");
  if (!(plain <= retry - kRlGap)) missed.push_back("plain_rl<=retry-0.2");
  if (!(push_plain > 0.0)) missed.push_back("push_line plain_rl>0");
  std::string miss;
  for (const auto& m : missed) miss += (miss.empty() ? "" : ",") + m;
  report(4, missed.empty(),
         "retry=" + fmt(retry, 3) + " critiq=" + fmt(critiq, 3) + " bc=" + fmt(bc, 3) +
             " dagger=" + fmt(dagger, 3) + " plain_rl=" + fmt(plain, 3) +
             " push_line plain_rl=" + fmt(push_plain, 3) +
             (miss.empty() ? "" : "; missed: " + miss));

  int high = 0;
  for (const auto& r : retry_runs) high += final_third(r.logs).mode() == ExplorationLevel::high;
  ExplorationHistogram plain_hist;
  for (const auto& r : plain_runs) plain_hist.merge(final_third(r.logs));
  const bool plain_none = plain_hist.mode() == ExplorationLevel::none;
  report(5, high >= 4 && plain_none,
         "retry High in final third for " + std::to_string(high) + "/5 seeds; plain_rl mode " +
             to_string(plain_hist.mode()));

  // Median over seeds of the logged ratio, one value per iteration.
  std::vector<double> median;
  const std::size_t n = retry_runs[0].logs.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v;
    for (const auto& r : retry_runs) v.push_back(*r.logs[i].density_ratio);
    std::sort(v.begin(), v.end());
    median.push_back(v[v.size() / 2]);
  }
  int rises = 0;
  double worst = 0.0;
  for (std::size_t i = 1; i < median.size(); ++i)
    if (median[i] > median[i - 1]) {
      ++rises;
      worst = std::max(worst, median[i] - median[i - 1]);
    }
  report(9, rises == 0,
         "median C " + fmt(median.front(), 2) + " -> " + fmt(median.back(), 2) + ", " +
             std::to_string(rises) + " increases (largest +" + fmt(worst, 3) + ")");
}

TabularPolicy random_policy(const ContextualMdp& env, RngStream& r, double scale) {
  TabularPolicy p(env.num_actions());
  for (const auto& s : enumerate_states(env)) {
    const Observation o = env.observe(s);
    if (p.find(o)) continue;
    std::vector<double> row(env.num_actions());
    for (auto& x : row) x = scale * (2.0 * r.uniform() - 1.0);
    p.set_row(o, row);
  }
  return p;
}

void criterion_gradient() {
  RngStream r(6, "gradient");
  double worst = 0.0;
  for (const EnvPtr& env : {make_bandit({1.0, 0.0}), make_env(line_cfg(2))}) {
    const ExactModel m = ExactModel::build(*env);
    const TabularPolicy p = random_policy(*env, r, 1.0);
    const LogitGradient g = exact_gradient(m, p);
    const long double h = kFdStep;
    for (const auto& [o, row] : p.logits())
      for (std::size_t a = 0; a < row.size(); ++a) {
        TabularPolicy up = p, down = p;
        up.row(o)[a] += kFdStep;
        down.row(o)[a] -= kFdStep;
        const double fd = static_cast<double>(
            (exact_return_extended(m, up) - exact_return_extended(m, down)) / (2.0L * h));
        const double an = g.count(o) ? g.at(o)[a] : 0.0;
        const double scale = std::max({std::abs(an), std::abs(fd), 1e-8});
        worst = std::max(worst, std::abs(an - fd) / scale);
      }
  }

  const EnvPtr env = make_env(line_cfg(2));
  const ExactModel m = ExactModel::build(*env);
  int positive = 0;
  for (int trial = 0; trial < kPgTrials; ++trial) {
    RngStream tr = r.child(static_cast<std::uint64_t>(trial));
    const TabularPolicy p = random_policy(*env, tr, 0.5);
    const LogitGradient exact = exact_gradient(m, p);
    std::vector<Trajectory> batch;
    RngStream bs = tr.child("batch");
    for (int e = 0; e < kPgEpisodes; ++e) {
      RngStream ep = bs.child(static_cast<std::uint64_t>(e));
      batch.push_back(rollout(*env, p, env->initial(sample_context(*env, ep)), ep));
    }
    const LogitGradient est = pg_gradient(p, batch, PgConfig{});
    double dot = 0.0;
    for (const auto& [o, row] : est)
      if (auto it = exact.find(o); it != exact.end())
        for (std::size_t a = 0; a < row.size(); ++a) dot += row[a] * it->second[a];
    positive += dot > 0.0;
  }
  report(6, worst < kGradRelTol && positive >= kPgPositiveFraction * kPgTrials,
         "max relative error " + sci(worst) + "; positive inner product in " +
             std::to_string(positive) + "/" + std::to_string(kPgTrials) + " batches");
}

void criterion_discriminator() {
  const EnvPtr env = make_env(line_cfg(3));
  const TeacherPolicy tp = plan_teacher(*env);
  bool accurate = true, equal = true;
  for (auto seed : kSeeds) {
    const TrainResult bc = run_bc(*env, tp, {}, RngStream(seed, "train"));
    const AggDataset& ds = bc.dataset;
    std::vector<Trajectory> rollouts;
    RngStream r(seed, "student");
    for (int e = 0; e < 8; ++e) {
      RngStream ep = r.child(static_cast<std::uint64_t>(e));
      rollouts.push_back(rollout(*env, bc.policy, env->initial(sample_context(*env, ep)), ep));
    }
    std::vector<Observation> teacher, student;
    for (const auto& rec : ds.records()) teacher.push_back(rec.observation);
    std::set<PrivilegedState> off;
    for (const auto& t : rollouts)
      for (const auto& s : t.steps)
        if (!ds.contains(s.observation)) {
          student.push_back(s.observation);
          off.insert(s.state);
        }
    const Discriminator d = train_discriminator(Discriminator(0.5, 0.0), teacher, student);
    for (const auto& o : teacher) accurate &= !d.is_critical(o);
    for (const auto& o : student) accurate &= d.is_critical(o);
    const auto q = critical_states(rollouts, d);
    equal &= std::set<PrivilegedState>(q.begin(), q.end()) == off;
  }
  report(7, accurate && equal,
         std::string("threshold accuracy ") + (accurate ? "1.0" : "< 1.0") +
             "; queried set equals off-support visits: " + (equal ? "yes" : "no"));
}

void criterion_selector() {
  const EnvPtr env = make_env(line_cfg(3));
  const TeacherPolicy tp = plan_teacher(*env);
  RngStream rng(8, "selector");
  int matched = 0, ordered = 0;
  for (int inst = 0; inst < kSelectorInstances; ++inst) {
    RngStream r = rng.child(static_cast<std::uint64_t>(inst));
    AggDataset ds(3);
    const int demos = 1 + static_cast<int>(r.index(4));
    for (int d = 0; d < demos; ++d) {
      const Context c = sample_context(*env, r);
      const Trajectory demo = teacher_rollout_from(*env, tp, env->initial(c));
      const std::size_t keep = 1 + r.index(demo.size());
      for (std::size_t i = 0; i < keep; ++i)
        ds.append({demo.steps[i].observation, demo.steps[i].action, c, 0});
    }
    FunctionSource uniform([](const PrivilegedState&, const Observation&, RngStream& g) {
      return static_cast<Action>(g.index(3));
    });
    const Trajectory traj = rollout(*env, uniform, env->initial(sample_context(*env, r)), r);
    std::set<std::size_t> scan;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      if (traj.steps[t].terminal) continue;
      const PrivilegedState next = t + 1 < traj.size() ? traj.steps[t + 1].state : traj.end;
      if (!ds.contains(env->observe(next))) scan.insert(t);
    }
    const auto cands = oracle_critical_states(traj, ds, *env, tp, 0.0);
    std::set<std::size_t> got;
    for (const auto& c : cands) got.insert(c.time);
    matched += got == scan;

    const double base = bayes_error(ds).delta_total;
    std::vector<double> recomputed;
    for (const auto& c : cands) {
      AggDataset aug = ds;
      for (const auto& s : teacher_rollout_from(*env, tp, c.state).steps)
        aug.append({s.observation, s.action, s.state.context, -1});
      recomputed.push_back(bayes_error(aug).delta_total - base);
    }
    bool ok = true;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      ok &= std::abs(recomputed[i] - cands[i].delta_increase) < 1e-12;
      if (i > 0) ok &= recomputed[i - 1] <= recomputed[i];
    }
    ordered += ok;
  }
  report(8, matched == kSelectorInstances && ordered == kSelectorInstances,
         "candidate sets equal on " + std::to_string(matched) + "/" +
             std::to_string(kSelectorInstances) + ", ascending delta order on " +
             std::to_string(ordered) + "/" + std::to_string(kSelectorInstances));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_reproducibility() {
  const fs::path root = fs::temp_directory_path() / "distill-acceptance-repro";
  fs::remove_all(root);
  int identical = 0, compared = 0;
  std::string diff;
  for (Method m : {Method::bc, Method::dagger, Method::critiq, Method::retry, Method::plain_rl,
                   Method::oracle}) {
    ExperimentConfig cfg = default_experiment(m);
    std::ostringstream err;
    cfg.output = root / (to_string(m) + "-a");
    const int ca = run_experiment(cfg, err);
    cfg.output = root / (to_string(m) + "-b");
    const int cb = run_experiment(cfg, err);
    if (ca != 0 || cb != 0) {
      diff += " " + to_string(m) + " run failed;";
      ++compared;
      continue;
    }
    std::vector<fs::path> files{"summary.csv"};
    for (auto s : kSeeds) files.push_back(fs::path("seed-" + std::to_string(s)) / "iterations.jsonl");
    for (const auto& f : files) {
      ++compared;
      if (slurp(root / (to_string(m) + "-a") / f) == slurp(root / (to_string(m) + "-b") / f))
        ++identical;
      else
        diff += " " + to_string(m) + "/" + f.string() + ";";
    }
  }
  fs::remove_all(root);
  report(10, identical == compared,
         std::to_string(identical) + "/" + std::to_string(compared) +
             " JSONL/CSV artifacts byte-identical" + diff);
}

}  // namespace

int main() {
  criterion_oracle();
  criteria_imitation();
  criteria_rl_and_success();
  criterion_gradient();
  criterion_discriminator();
  criterion_selector();
  criterion_reproducibility();
  int failures = 0;
  for (const auto& [id, r] : results) {
    std::printf("criterion %2d: %s  %s\n", id, r.first ? "PASS" : "FAIL", r.second.c_str());
    failures += !r.first;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
