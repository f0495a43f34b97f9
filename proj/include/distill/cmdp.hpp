#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "distill/rng.hpp"

namespace distill {

using Context = int;
using Action = int;

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when an enumeration would exceed its configured state cap.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Context-free part of the simulator state: the agent (or block) location
/// plus the bitmask of goals already revealed as wrong. `done` marks the
/// absorbing state entered after the success event.
struct BaseState {
  int node = 0;
  std::uint32_t mask = 0;
  bool done = false;

  auto operator<=>(const BaseState&) const = default;
};

/// Teacher-side state: the hidden context together with the base state.
struct PrivilegedState {
  Context context = 0;
  BaseState base;

  auto operator<=>(const PrivilegedState&) const = default;
};

/// What the student sees. Never carries the context.
struct Observation {
  int node = 0;
  std::uint32_t mask = 0;
  bool done = false;

  auto operator<=>(const Observation&) const = default;

  std::string to_string() const;
};

struct StateHash {
  std::size_t operator()(const PrivilegedState& s) const noexcept;
  std::size_t operator()(const Observation& o) const noexcept;
};

struct Transition {
  PrivilegedState next;
  double reward = 0.0;
  bool terminal = false;
};

/// Finite contextual MDP with deterministic dynamics and sparse reward.
///
/// Subclasses supply the dynamics on base states; this class owns the
/// discount, horizon and context prior and enforces the observe/step
/// contracts shared by every environment.
class ContextualMdp {
 public:
  virtual ~ContextualMdp() = default;

  virtual std::string_view kind() const = 0;
  virtual std::span<const std::string> action_names() const = 0;

  int num_contexts() const { return static_cast<int>(prior_.size()); }
  int num_actions() const { return static_cast<int>(action_names().size()); }
  double gamma() const { return gamma_; }
  int horizon() const { return horizon_; }
  std::span<const double> context_prior() const { return prior_; }

  /// True when the state lies in the declared state set.
  virtual bool is_valid(const PrivilegedState& s) const = 0;

  PrivilegedState initial(Context c) const;
  Observation observe(const PrivilegedState& s) const;
  Transition step(const PrivilegedState& s, Action a) const;

  /// Number of distinct goals the agent has probed on reaching `s`,
  /// counting the successful one.
  int goals_probed(const PrivilegedState& s) const;

  /// Feature vector for linear-softmax student policies.
  virtual std::vector<double> features(const Observation& o) const;

  std::string describe(const PrivilegedState& s) const;

 protected:
  ContextualMdp(double gamma, int horizon, std::vector<double> prior);

  virtual BaseState start_state() const = 0;
  virtual Transition step_valid(const PrivilegedState& s, Action a) const = 0;

 private:
  double gamma_;
  int horizon_;
  std::vector<double> prior_;
};

Context sample_context(const ContextualMdp& env, RngStream& rng);

struct TrajectoryStep {
  PrivilegedState state;
  Observation observation;
  Action action = 0;
  double reward = 0.0;
  bool terminal = false;

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Context context = 0;
  std::uint64_t seed = 0;
  /// Fingerprint of the policy snapshot that generated the actions.
  std::uint64_t policy_fingerprint = 0;
  PrivilegedState start;
  PrivilegedState end;

  bool success() const;
  std::size_t size() const { return steps.size(); }
  bool operator==(const Trajectory&) const = default;
};

/// Anything that can pick actions during a rollout. Student policies only
/// look at the observation; the teacher looks at the privileged state.
class ActionSource {
 public:
  virtual ~ActionSource() = default;
  virtual Action act(const PrivilegedState& state, const Observation& obs,
                     RngStream& rng) const = 0;
  virtual std::uint64_t fingerprint() const { return 0; }
};

/// Adapts a plain callable into an ActionSource.
class FunctionSource : public ActionSource {
 public:
  using Fn = std::function<Action(const PrivilegedState&, const Observation&, RngStream&)>;
  explicit FunctionSource(Fn fn) : fn_(std::move(fn)) {}
  Action act(const PrivilegedState& s, const Observation& o, RngStream& rng) const override {
    return fn_(s, o, rng);
  }

 private:
  Fn fn_;
};

/// Runs one episode from `start` until the terminal event or the horizon.
Trajectory rollout(const ContextualMdp& env, const ActionSource& policy,
                   const PrivilegedState& start, RngStream& rng);

/// Re-simulates the recorded action sequence from the trajectory's start.
Trajectory replay(const ContextualMdp& env, const Trajectory& traj);

double discounted_return(const Trajectory& traj, double gamma);

}  // namespace distill
