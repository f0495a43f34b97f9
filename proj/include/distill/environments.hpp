#pragma once

#include <memory>
#include <optional>
#include <unordered_map>
#include <string>
#include <vector>

#include "distill/cmdp.hpp"

namespace distill {

enum class EnvKind { line_search, push_line, room_graph };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct EnvConfig {
  EnvKind kind = EnvKind::line_search;
  int num_goals = 3;
  /// 0 selects the per-kind default (8K, 6K, 4K).
  int horizon = 0;
  double gamma = 0.99;
  /// Cells between consecutive goals on the line layouts.
  int spacing = 2;
  /// Empty selects the uniform prior.
  std::vector<double> context_prior;
};

constexpr int kMaxGoals = 12;

using EnvPtr = std::shared_ptr<const ContextualMdp>;

/// Builds one of the shipped environments. Throws std::invalid_argument on a
/// bad kind, goal count, layout, or a horizon shorter than exhaustive search.
EnvPtr make_env(const EnvConfig& cfg);

/// Single-step bandit: one context, one arm per reward entry, every pull
/// ends the episode. Used to check gradient estimators in closed form.
EnvPtr make_bandit(std::vector<double> arm_rewards, double gamma = 0.99);

/// Scripted policy that probes goals nearest-first (lowest index on ties)
/// without looking at the context. Solves every shipped environment.
Action exhaustive_search_action(const ContextualMdp& env, const Observation& obs);

/// Breadth-first closure from every initial state under every action.
std::vector<PrivilegedState> enumerate_states(const ContextualMdp& env,
                                              std::size_t cap = 1'000'000);

/// Maps enumerated states to dense indices.
class StateIndex {
 public:
  StateIndex() = default;
  explicit StateIndex(std::vector<PrivilegedState> states);

  std::size_t size() const { return states_.size(); }
  const std::vector<PrivilegedState>& states() const { return states_; }
  const PrivilegedState& operator[](std::size_t i) const { return states_[i]; }
  std::optional<std::size_t> find(const PrivilegedState& s) const;
  std::size_t at(const PrivilegedState& s) const;

 private:
  std::vector<PrivilegedState> states_;
  std::unordered_map<PrivilegedState, std::size_t, StateHash> lookup_;
};

/// Observations with at least two privileged preimages among `states`.
std::vector<Observation> aliased_observations(const ContextualMdp& env,
                                              const std::vector<PrivilegedState>& states);

}  // namespace distill
