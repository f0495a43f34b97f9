#include <doctest.h>

#include <cmath>

#include "distill/belief.hpp"
#include "distill/environments.hpp"
#include "distill/exact.hpp"
#include "distill/metrics.hpp"

using namespace distill;

namespace {

EnvPtr line3() { return make_env(EnvConfig{}); }

IterationLog log_with(std::int64_t mismatches, std::int64_t count) {
  IterationLog l;
  l.delta_mismatches = mismatches;
  l.delta_count = count;
  l.delta_total = count ? static_cast<double>(mismatches) / count : 0.0;
  return l;
}

}  // namespace

TEST_CASE("the oracle policy succeeds everywhere with no regret") {
  auto env = line3();
  const RealizablePolicy rp = solve_belief_mdp(*env);
  EvalOptions opts;
  opts.optimal_return = rp.optimal_return();
  const EvalReport r = evaluate(*env, rp.observation_policy(), 100, RngStream(1, "eval"), opts);
  CHECK(r.success_rate == 1.0);
  REQUIRE(r.regret);
  CHECK(std::abs(*r.regret) <= 1e-9);
  CHECK(r.exploration.total() == 100);
  CHECK(r.exploration.mode() == ExplorationLevel::high);
}

TEST_CASE("opening only the first chest succeeds a third of the time") {
  auto env = line3();
  DeterministicPolicy first(3);
  first.set(Observation{0, 0, false}, 1);
  first.set(Observation{1, 0, false}, 1);
  first.set(Observation{2, 0, false}, 2);
  ExactModel m = ExactModel::build(*env);
  m.gamma = 1.0;
  CHECK(exact_return(m, first) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const EvalReport r = evaluate(*env, first, 300, RngStream(2, "eval"));
  CHECK(r.exploration.counts[0] == 0);
  CHECK(r.exploration.counts[1] + r.exploration.counts[3] == 300);
}

TEST_CASE("an episode that opens nothing has exploration level None") {
  auto env = line3();
  const DeterministicPolicy left(3);
  const EvalReport r = evaluate(*env, left, 20, RngStream(3, "eval"));
  CHECK(r.exploration.counts[0] == 20);
  CHECK(r.exploration.mode() == ExplorationLevel::none);
  CHECK(r.success_rate == 0.0);
}

TEST_CASE("evaluation is reproducible and never shows negative regret") {
  for (EnvKind kind : {EnvKind::line_search, EnvKind::push_line, EnvKind::room_graph}) {
    EnvConfig ec;
    ec.kind = kind;
    auto env = make_env(ec);
    const RealizablePolicy rp = solve_belief_mdp(*env);
    EvalOptions opts;
    opts.optimal_return = rp.optimal_return();
    opts.mode = EvalMode::sample;
    const TabularPolicy uniform(env->num_actions());
    const EvalReport a = evaluate(*env, uniform, 50, RngStream(4, "eval"), opts);
    const EvalReport b = evaluate(*env, uniform, 50, RngStream(4, "eval"), opts);
    CHECK(a == b);
    CHECK(*a.regret >= -1e-9);
  }
}

TEST_CASE("exploration histogram mode prefers the lower level on ties") {
  ExplorationHistogram h;
  h.add(ExplorationLevel::high);
  h.add(ExplorationLevel::low);
  CHECK(h.mode() == ExplorationLevel::low);
  h.add(ExplorationLevel::high);
  CHECK(h.mode() == ExplorationLevel::high);
  CHECK(h.total() == 3);
}

TEST_CASE("delta curve verdicts") {
  CHECK(delta_curve({log_with(1, 3)}).non_decreasing);
  const DeltaCurve up = delta_curve({log_with(1, 3), log_with(2, 6), log_with(3, 7)});
  CHECK(up.non_decreasing);
  CHECK(up.increments.size() == 2);
  CHECK(up.increments[0] == 0.0);
  // 1/3 then 333333/1000000 is a strict decrease, however small
  CHECK_FALSE(delta_curve({log_with(1, 3), log_with(333333, 1000000)}).non_decreasing);
}

TEST_CASE("density ratio arithmetic") {
  const Observation a{0, 0, false}, b{1, 0, false}, c{2, 0, false}, d{3, 0, false};
  std::map<Observation, double> p{{a, 0.5}, {b, 0.5}};
  CHECK(density_ratio(p, p, 1e-3).sup_ratio == doctest::Approx(1.0));
  const std::map<Observation, double> q{{a, 0.25}, {b, 0.25}, {c, 0.25}, {d, 0.25}};
  const RatioReport sub = density_ratio(p, q, 1e-12);
  CHECK(sub.sup_ratio == doctest::Approx(2.0));
  CHECK_FALSE(sub.disjoint_support);
  const std::map<Observation, double> outside{{a, 0.5}, {d, 0.5}};
  const std::map<Observation, double> target{{a, 1.0}};
  const RatioReport dis = density_ratio(outside, target, 1e-3);
  CHECK(dis.disjoint_support);
  CHECK(dis.sup_ratio == doctest::Approx((0.5 + 1e-3) / 1e-3));
  CHECK(density_ratio(q, p, 1e-3).sup_ratio >= 1.0 - 1e-9);
}

TEST_CASE("iteration records round-trip through JSON") {
  IterationLog l = log_with(2, 7);
  l.iteration = 4;
  l.queries_made = 3;
  l.train_loss = 0.25;
  l.density_ratio = 3.5;
  l.exploration.counts = {1, 2, 3, 4};
  const IterationLog back = iteration_log_from_json(to_json(l));
  CHECK(back.iteration == 4);
  CHECK(back.delta_mismatches == 2);
  CHECK(back.train_loss == l.train_loss);
  CHECK(back.density_ratio == l.density_ratio);
  CHECK_FALSE(back.batch_mean_return);
  CHECK(back.exploration.counts == l.exploration.counts);
}

TEST_CASE("advantage sup is non-negative on visited beliefs") {
  auto env = line3();
  const RealizablePolicy rp = solve_belief_mdp(*env);
  std::vector<std::size_t> all(rp.beliefs().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  CHECK(advantage_sup(rp, all) >= 0.0);
}
