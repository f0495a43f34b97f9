#include "distill/environments.hpp"

#include <array>
#include <cstdlib>
#include <deque>
#include <map>
#include <stdexcept>

namespace distill {
namespace {

std::vector<double> resolve_prior(const std::vector<double>& given, int k) {
  if (given.empty()) return std::vector<double>(k, 1.0 / k);
  if (static_cast<int>(given.size()) != k)
    throw std::invalid_argument("context prior length must equal the number of goals");
  return given;
}

std::uint32_t bit(int g) { return 1u << g; }

// Shared geometry of the two line layouts: cells 0..spacing*K, goal g at
// cell spacing*(g+1), start at cell 0.
class LineLayout : public ContextualMdp {
 public:
  LineLayout(int goals, int spacing, double gamma, int horizon, std::vector<double> prior)
      : ContextualMdp(gamma, horizon, std::move(prior)), goals_(goals), spacing_(spacing) {}

  int goal_cell(int g) const { return spacing_ * (g + 1); }
  int last_cell() const { return spacing_ * goals_; }
  int goal_at(int cell) const {
    if (cell <= 0 || cell % spacing_ != 0) return -1;
    const int g = cell / spacing_ - 1;
    return g < goals_ ? g : -1;
  }

  /// Nearest unrevealed goal, lowest index on ties.
  int nearest_open_goal(const Observation& o) const {
    int best = -1;
    int best_dist = 0;
    for (int g = 0; g < goals_; ++g) {
      if (o.mask & bit(g)) continue;
      const int d = std::abs(goal_cell(g) - o.node);
      if (best < 0 || d < best_dist) {
        best = g;
        best_dist = d;
      }
    }
    return best;
  }

  bool is_valid(const PrivilegedState& s) const override {
    if (s.context < 0 || s.context >= goals_) return false;
    if (s.base.node < 0 || s.base.node > last_cell()) return false;
    if (s.base.mask >= bit(goals_)) return false;
    if (s.base.mask & bit(s.context)) return false;
    if (s.base.done && s.base.node != goal_cell(s.context)) return false;
    return true;
  }

 protected:
  BaseState start_state() const override { return BaseState{0, 0, false}; }

  int goals_;
  int spacing_;
};

class LineSearch final : public LineLayout {
 public:
  using LineLayout::LineLayout;
  enum : Action { kLeft = 0, kRight = 1, kOpen = 2 };

  std::string_view kind() const override { return "line_search"; }
  std::span<const std::string> action_names() const override { return names_; }

  Action search_action(const Observation& o) const {
    const int g = nearest_open_goal(o);
    if (g < 0) return kOpen;
    if (goal_cell(g) == o.node) return kOpen;
    return goal_cell(g) > o.node ? kRight : kLeft;
  }

 protected:
  Transition step_valid(const PrivilegedState& s, Action a) const override {
    PrivilegedState next = s;
    switch (a) {
      case kLeft:
        next.base.node = std::max(0, s.base.node - 1);
        break;
      case kRight:
        next.base.node = std::min(last_cell(), s.base.node + 1);
        break;
      default: {
        const int g = goal_at(s.base.node);
        if (g == s.context) {
          next.base.done = true;
          return Transition{next, 1.0, true};
        }
        if (g >= 0) next.base.mask |= bit(g);
        break;
      }
    }
    return Transition{next, 0.0, false};
  }

 private:
  std::array<std::string, 3> names_{"Left", "Right", "Open"};
};

class PushLine final : public LineLayout {
 public:
  using LineLayout::LineLayout;
  enum : Action { kPushLeft = 0, kPushRight = 1 };

  std::string_view kind() const override { return "push_line"; }
  std::span<const std::string> action_names() const override { return names_; }

  Action search_action(const Observation& o) const {
    const int g = nearest_open_goal(o);
    if (g < 0) return kPushRight;
    return goal_cell(g) >= o.node ? kPushRight : kPushLeft;
  }

 protected:
  Transition step_valid(const PrivilegedState& s, Action a) const override {
    PrivilegedState next = s;
    next.base.node = a == kPushLeft ? std::max(0, s.base.node - 1)
                                    : std::min(last_cell(), s.base.node + 1);
    if (next.base.node == s.base.node) return Transition{next, 0.0, false};
    // Entering a goal cell counts as visiting it, including pass-through.
    const int g = goal_at(next.base.node);
    if (g == s.context) {
      next.base.done = true;
      return Transition{next, 1.0, true};
    }
    if (g >= 0) next.base.mask |= bit(g);
    return Transition{next, 0.0, false};
  }

 private:
  std::array<std::string, 2> names_{"PushLeft", "PushRight"};
};

// Star graph: node 0 is the hall, node g+1 is room g. Action 0 moves to the
// hall, action g+1 moves to room g; moves to non-neighbours are no-ops.
class RoomGraph final : public ContextualMdp {
 public:
  RoomGraph(int rooms, double gamma, int horizon, std::vector<double> prior)
      : ContextualMdp(gamma, horizon, std::move(prior)), rooms_(rooms) {
    names_.push_back("Hall");
    for (int g = 0; g < rooms_; ++g) names_.push_back("Room" + std::to_string(g + 1));
  }

  std::string_view kind() const override { return "room_graph"; }
  std::span<const std::string> action_names() const override { return names_; }

  bool is_valid(const PrivilegedState& s) const override {
    if (s.context < 0 || s.context >= rooms_) return false;
    if (s.base.node < 0 || s.base.node > rooms_) return false;
    if (s.base.mask >= bit(rooms_)) return false;
    if (s.base.mask & bit(s.context)) return false;
    if (s.base.done && s.base.node != s.context + 1) return false;
    return true;
  }

  Action search_action(const Observation& o) const {
    if (o.node != 0) return 0;
    for (int g = 0; g < rooms_; ++g)
      if (!(o.mask & bit(g))) return g + 1;
    return 0;
  }

 protected:
  BaseState start_state() const override { return BaseState{0, 0, false}; }

  Transition step_valid(const PrivilegedState& s, Action a) const override {
    PrivilegedState next = s;
    if (a == 0) {
      next.base.node = 0;
      return Transition{next, 0.0, false};
    }
    if (s.base.node != 0) return Transition{next, 0.0, false};
    const int g = a - 1;
    next.base.node = a;
    if (g == s.context) {
      next.base.done = true;
      return Transition{next, 1.0, true};
    }
    next.base.mask |= bit(g);
    return Transition{next, 0.0, false};
  }

 private:
  int rooms_;
  std::vector<std::string> names_;
};

class Bandit final : public ContextualMdp {
 public:
  Bandit(std::vector<double> rewards, double gamma)
      : ContextualMdp(gamma, 1, {1.0}), rewards_(std::move(rewards)) {
    for (std::size_t a = 0; a < rewards_.size(); ++a) names_.push_back("Arm" + std::to_string(a));
  }

  std::string_view kind() const override { return "bandit"; }
  std::span<const std::string> action_names() const override { return names_; }

  bool is_valid(const PrivilegedState& s) const override {
    if (s.context != 0 || s.base.mask != 0) return false;
    if (!s.base.done) return s.base.node == 0;
    return s.base.node >= 1 && s.base.node <= static_cast<int>(rewards_.size());
  }

 protected:
  BaseState start_state() const override { return BaseState{0, 0, false}; }

  Transition step_valid(const PrivilegedState& s, Action a) const override {
    PrivilegedState next = s;
    next.base.node = a + 1;
    next.base.done = true;
    return Transition{next, rewards_[a], true};
  }

 private:
  std::vector<double> rewards_;
  std::vector<std::string> names_;
};

int exhaustive_steps(EnvKind kind, int k, int spacing) {
  switch (kind) {
    case EnvKind::line_search:
      return spacing * k + k;
    case EnvKind::push_line:
      return spacing * k;
    case EnvKind::room_graph:
      return 2 * k - 1;
  }
  return 0;
}

}  // namespace

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::line_search:
      return "line_search";
    case EnvKind::push_line:
      return "push_line";
    case EnvKind::room_graph:
      return "room_graph";
  }
  return "unknown";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "line_search") return EnvKind::line_search;
  if (name == "push_line") return EnvKind::push_line;
  if (name == "room_graph") return EnvKind::room_graph;
  throw std::invalid_argument("unknown environment kind '" + name + "'");
}

EnvPtr make_env(const EnvConfig& cfg) {
  const int k = cfg.num_goals;
  if (k < 1 || k > kMaxGoals)
    throw std::invalid_argument("num_goals must lie in [1, " + std::to_string(kMaxGoals) + "]");
  if (cfg.spacing < 1) throw std::invalid_argument("spacing must be positive");
  int horizon = cfg.horizon;
  if (horizon == 0) {
    switch (cfg.kind) {
      case EnvKind::line_search:
        horizon = 8 * k;
        break;
      case EnvKind::push_line:
        horizon = 6 * k;
        break;
      case EnvKind::room_graph:
        horizon = 4 * k;
        break;
    }
  }
  const int needed = exhaustive_steps(cfg.kind, k, cfg.spacing);
  if (horizon < needed)
    throw std::invalid_argument("horizon " + std::to_string(horizon) +
                                " is shorter than exhaustive search (" + std::to_string(needed) +
                                " steps)");
  auto prior = resolve_prior(cfg.context_prior, k);
  switch (cfg.kind) {
    case EnvKind::line_search:
      return std::make_shared<LineSearch>(k, cfg.spacing, cfg.gamma, horizon, std::move(prior));
    case EnvKind::push_line:
      return std::make_shared<PushLine>(k, cfg.spacing, cfg.gamma, horizon, std::move(prior));
    case EnvKind::room_graph:
      return std::make_shared<RoomGraph>(k, cfg.gamma, horizon, std::move(prior));
  }
  throw std::invalid_argument("unknown environment kind");
}

EnvPtr make_bandit(std::vector<double> arm_rewards, double gamma) {
  if (arm_rewards.empty()) throw std::invalid_argument("bandit needs at least one arm");
  return std::make_shared<Bandit>(std::move(arm_rewards), gamma);
}

Action exhaustive_search_action(const ContextualMdp& env, const Observation& obs) {
  if (auto* e = dynamic_cast<const LineSearch*>(&env)) return e->search_action(obs);
  if (auto* e = dynamic_cast<const PushLine*>(&env)) return e->search_action(obs);
  if (auto* e = dynamic_cast<const RoomGraph*>(&env)) return e->search_action(obs);
  throw ContractViolation("no scripted search for environment kind " + std::string(env.kind()));
}

std::vector<PrivilegedState> enumerate_states(const ContextualMdp& env, std::size_t cap) {
  std::vector<PrivilegedState> order;
  std::unordered_map<PrivilegedState, std::size_t, StateHash> seen;
  std::deque<PrivilegedState> frontier;
  auto visit = [&](const PrivilegedState& s) {
    if (seen.contains(s)) return;
    if (order.size() >= cap)
      throw CapExceeded("state enumeration exceeded cap of " + std::to_string(cap));
    seen.emplace(s, order.size());
    order.push_back(s);
    frontier.push_back(s);
  };
  for (Context c = 0; c < env.num_contexts(); ++c) visit(env.initial(c));
  while (!frontier.empty()) {
    const PrivilegedState s = frontier.front();
    frontier.pop_front();
    if (s.base.done) continue;
    for (Action a = 0; a < env.num_actions(); ++a) visit(env.step(s, a).next);
  }
  return order;
}

StateIndex::StateIndex(std::vector<PrivilegedState> states) : states_(std::move(states)) {
  lookup_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) lookup_.emplace(states_[i], i);
}

std::optional<std::size_t> StateIndex::find(const PrivilegedState& s) const {
  auto it = lookup_.find(s);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t StateIndex::at(const PrivilegedState& s) const {
  auto idx = find(s);
  if (!idx) throw ContractViolation("state not in enumeration");
  return *idx;
}

std::vector<Observation> aliased_observations(const ContextualMdp& env,
                                              const std::vector<PrivilegedState>& states) {
  std::map<Observation, int> preimages;
  for (const auto& s : states) ++preimages[env.observe(s)];
  std::vector<Observation> out;
  for (const auto& [o, n] : preimages)
    if (n >= 2) out.push_back(o);
  return out;
}

}  // namespace distill
