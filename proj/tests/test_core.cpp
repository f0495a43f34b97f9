#include <doctest.h>

#include <array>
#include <functional>
#include <set>
#include <tuple>

#include "distill/cmdp.hpp"
#include "distill/environments.hpp"
#include "distill/rng.hpp"
#include "distill/teacher.hpp"

using namespace distill;

namespace {

EnvPtr line3() { return make_env(EnvConfig{}); }

EnvPtr env_of(EnvKind kind, int k) {
  EnvConfig ec;
  ec.kind = kind;
  ec.num_goals = k;
  return make_env(ec);
}

// Independent re-statement of the three layouts for the state-count oracle.
// Tuple = (context, node, mask, done).
using Tup = std::tuple<int, int, unsigned, bool>;

std::set<Tup> dfs_states(EnvKind kind, int k) {
  std::set<Tup> seen;
  const int last = 2 * k;
  std::function<void(Tup)> visit = [&](Tup s) {
    if (!seen.insert(s).second) return;
    auto [c, node, mask, done] = s;
    if (done) return;
    std::vector<Tup> next;
    if (kind == EnvKind::line_search) {
      next.push_back({c, node > 0 ? node - 1 : 0, mask, false});
      next.push_back({c, node < last ? node + 1 : last, mask, false});
      if (node > 0 && node % 2 == 0) {
        const int g = node / 2 - 1;
        if (g == c)
          next.push_back({c, node, mask, true});
        else
          next.push_back({c, node, mask | (1u << g), false});
      } else {
        next.push_back(s);
      }
    } else if (kind == EnvKind::push_line) {
      for (int d : {-1, 1}) {
        const int n = std::clamp(node + d, 0, last);
        if (n == node) {
          next.push_back(s);
          continue;
        }
        if (n > 0 && n % 2 == 0) {
          const int g = n / 2 - 1;
          next.push_back(g == c ? Tup{c, n, mask, true} : Tup{c, n, mask | (1u << g), false});
        } else {
          next.push_back({c, n, mask, false});
        }
      }
    } else {
      next.push_back({c, 0, mask, false});
      for (int g = 0; g < k; ++g) {
        if (node != 0) {
          next.push_back(s);
          continue;
        }
        next.push_back(g == c ? Tup{c, g + 1, mask, true} : Tup{c, g + 1, mask | (1u << g), false});
      }
    }
    for (const auto& n : next) visit(n);
  };
  for (int c = 0; c < k; ++c) visit({c, 0, 0u, false});
  return seen;
}

}  // namespace

TEST_CASE("rng streams are reproducible and independent by name") {
  RngStream a(7, "ctx"), b(7, "ctx"), c(7, "policy");
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 5; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(RngStream(7, "root").child("x").id() == RngStream(7, "root").child("x").id());
  CHECK(RngStream(7, "root").child(1).id() != RngStream(7, "root").child(2).id());
}

TEST_CASE("rng uniform and index stay in range") {
  RngStream r(1, "t");
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.index(3) < 3u);
  }
  const std::array<double, 3> w{0.0, 1.0, 0.0};
  for (int i = 0; i < 50; ++i) CHECK(r.categorical(w) == 1u);
}

TEST_CASE("sample_context frequencies under the uniform prior") {
  auto env = line3();
  RngStream r(3, "contexts");
  std::array<int, 3> counts{};
  for (int i = 0; i < 30000; ++i) ++counts[sample_context(*env, r)];
  for (int n : counts) CHECK(std::abs(n / 30000.0 - 1.0 / 3.0) < 0.02);
}

TEST_CASE("degenerate prior always returns its context") {
  EnvConfig ec;
  ec.context_prior = {1.0, 0.0, 0.0};
  auto env = make_env(ec);
  RngStream r(3, "contexts");
  for (int i = 0; i < 100; ++i) CHECK(sample_context(*env, r) == 0);
}

TEST_CASE("discounted_return arithmetic") {
  Trajectory t;
  for (double r : {0.0, 0.0, 1.0}) t.steps.push_back(TrajectoryStep{{}, {}, 0, r, r > 0});
  CHECK(discounted_return(t, 0.99) == doctest::Approx(0.9801).epsilon(1e-15));
  Trajectory z;
  z.steps.resize(4);
  CHECK(discounted_return(z, 0.99) == 0.0);
  Trajectory one;
  one.steps.push_back(TrajectoryStep{{}, {}, 0, 1.0, true});
  CHECK(discounted_return(one, 0.5) == 1.0);
}

TEST_CASE("observations drop the context") {
  auto env = line3();
  const PrivilegedState a{1, {3, 0b1, false}};
  const Observation o = env->observe(a);
  CHECK(o.node == 3);
  CHECK(o.mask == 0b1);
  CHECK(env->observe(PrivilegedState{0, {2, 0, false}}) ==
        env->observe(PrivilegedState{2, {2, 0, false}}));
  auto rooms = env_of(EnvKind::room_graph, 4);
  CHECK(rooms->observe(PrivilegedState{2, {0, 0b1, false}}) == Observation{0, 0b1, false});
}

TEST_CASE("observe rejects unknown states") {
  auto env = line3();
  CHECK_THROWS_AS(env->observe(PrivilegedState{5, {0, 0, false}}), ContractViolation);
  CHECK_THROWS_AS(env->observe(PrivilegedState{0, {99, 0, false}}), ContractViolation);
  CHECK_THROWS_AS(env->step(env->initial(0), 7), ContractViolation);
}

TEST_CASE("teacher trace on the first context") {
  auto env = line3();
  const TeacherPolicy tp = plan_teacher(*env);
  const Trajectory t = teacher_rollout_from(*env, tp, env->initial(0));
  REQUIRE(t.size() == 3);
  CHECK(t.steps[0].action == 1);
  CHECK(t.steps[1].action == 1);
  CHECK(t.steps[2].action == 2);
  CHECK(t.steps[2].reward == 1.0);
  CHECK(t.success());
}

TEST_CASE("fixed no-op policy runs to the horizon without reward") {
  EnvConfig ec;
  ec.horizon = 20;
  auto env = make_env(ec);
  FunctionSource left([](const PrivilegedState&, const Observation&, RngStream&) { return 0; });
  RngStream r(1, "p");
  const Trajectory t = rollout(*env, left, env->initial(1), r);
  CHECK(t.size() == 20);
  CHECK(discounted_return(t, 1.0) == 0.0);
}

TEST_CASE("rollouts replay bit-exactly and respect the horizon") {
  for (EnvKind kind : {EnvKind::line_search, EnvKind::push_line, EnvKind::room_graph}) {
    auto env = env_of(kind, 3);
    FunctionSource uniform([&](const PrivilegedState&, const Observation&, RngStream& r) {
      return static_cast<Action>(r.index(env->num_actions()));
    });
    for (int e = 0; e < 50; ++e) {
      RngStream r(11, "replay");
      RngStream ep = r.child(static_cast<std::uint64_t>(e));
      const Trajectory t = rollout(*env, uniform, env->initial(e % 3), ep);
      CHECK(t.size() <= static_cast<std::size_t>(env->horizon()));
      CHECK(replay(*env, t) == t);
      RngStream again = r.child(static_cast<std::uint64_t>(e));
      CHECK(rollout(*env, uniform, env->initial(e % 3), again) == t);
      std::uint32_t mask = 0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK((t.steps[i].state.base.mask & mask) == mask);
        mask = t.steps[i].state.base.mask;
        CHECK(t.steps[i].observation == env->observe(t.steps[i].state));
        if (i + 1 < t.size()) CHECK_FALSE(t.steps[i].terminal);
      }
    }
  }
}

TEST_CASE("reachable state counts match an independent depth-first closure") {
  const std::vector<std::pair<EnvKind, int>> cases{
      {EnvKind::line_search, 1}, {EnvKind::line_search, 2}, {EnvKind::line_search, 3},
      {EnvKind::push_line, 3},   {EnvKind::room_graph, 3},  {EnvKind::room_graph, 4}};
  for (auto [kind, k] : cases) {
    CAPTURE(to_string(kind));
    CAPTURE(k);
    auto env = env_of(kind, k);
    const auto states = enumerate_states(*env);
    const auto oracle = dfs_states(kind, k);
    CHECK(states.size() == oracle.size());
    std::set<Tup> mine;
    for (const auto& s : states) mine.insert({s.context, s.base.node, s.base.mask, s.base.done});
    CHECK(mine == oracle);
  }
  CHECK(enumerate_states(*line3()).size() == 96);
}

TEST_CASE("single-context line search has one context's state space") {
  EnvConfig ec;
  ec.num_goals = 1;
  auto env = make_env(ec);
  const auto states = enumerate_states(*env);
  // cells 0..2 plus the absorbing success state
  CHECK(states.size() == 4);
  CHECK(aliased_observations(*env, states).empty());
}

TEST_CASE("enumeration cap is enforced") {
  CHECK_THROWS_AS(enumerate_states(*line3(), 10), CapExceeded);
}

TEST_CASE("aliasing census is positive and stable") {
  for (EnvKind kind : {EnvKind::line_search, EnvKind::push_line, EnvKind::room_graph}) {
    auto env = env_of(kind, 3);
    const auto a = aliased_observations(*env, enumerate_states(*env));
    const auto b = aliased_observations(*env, enumerate_states(*env));
    CHECK(!a.empty());
    CHECK(a == b);
  }
}

TEST_CASE("nearest-first search solves every context within the horizon") {
  for (EnvKind kind : {EnvKind::line_search, EnvKind::push_line, EnvKind::room_graph}) {
    for (int k : {1, 2, 3, 4}) {
      auto env = env_of(kind, k);
      FunctionSource search([&](const PrivilegedState&, const Observation& o, RngStream&) {
        return exhaustive_search_action(*env, o);
      });
      for (Context c = 0; c < k; ++c) {
        RngStream r(1, "s");
        CHECK(rollout(*env, search, env->initial(c), r).success());
      }
    }
  }
}

TEST_CASE("serialized observations never mention the context") {
  auto env = line3();
  for (const auto& s : enumerate_states(*env)) {
    const std::string text = env->observe(s).to_string();
    CHECK(text.find("context") == std::string::npos);
    CHECK(text.find("c=") == std::string::npos);
  }
}

TEST_CASE("make_env rejects bad configurations") {
  EnvConfig ec;
  ec.num_goals = 0;
  CHECK_THROWS_AS(make_env(ec), std::invalid_argument);
  ec.num_goals = kMaxGoals + 1;
  CHECK_THROWS_AS(make_env(ec), std::invalid_argument);
  ec.num_goals = 3;
  ec.horizon = 5;
  CHECK_THROWS_AS(make_env(ec), std::invalid_argument);
  CHECK_THROWS_AS(env_kind_from_string("maze"), std::invalid_argument);
  CHECK(env_of(EnvKind::line_search, 3)->num_contexts() == 3);
  CHECK(env_of(EnvKind::room_graph, 4)->num_contexts() == 4);
  CHECK(line3()->horizon() == 24);
  CHECK(env_of(EnvKind::push_line, 3)->horizon() == 18);
  CHECK(env_of(EnvKind::room_graph, 4)->horizon() == 16);
}

TEST_CASE("push line sets bits on pass-through") {
  auto env = env_of(EnvKind::push_line, 3);
  PrivilegedState s = env->initial(2);
  for (int i = 0; i < 4; ++i) s = env->step(s, 1).next;
  CHECK(s.base.node == 4);
  CHECK(s.base.mask == 0b11);
}
