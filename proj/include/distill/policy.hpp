#pragma once

#include <map>
#include <span>
#include <vector>

#include "distill/cmdp.hpp"

namespace distill {

/// Student-side policy: an action distribution per observation.
class ObservationPolicy : public ActionSource {
 public:
  explicit ObservationPolicy(int num_actions) : num_actions_(num_actions) {}

  int num_actions() const { return num_actions_; }

  /// Writes the action distribution at `obs` into `out` (size num_actions).
  virtual void probabilities(const Observation& obs, std::span<double> out) const = 0;
  std::vector<double> probabilities(const Observation& obs) const;

  /// Most likely action, lowest index on ties.
  Action greedy(const Observation& obs) const;

  Action act(const PrivilegedState& s, const Observation& obs, RngStream& rng) const override;

 private:
  int num_actions_;
};

/// Softmax over per-observation logits; unseen observations are uniform.
class TabularPolicy : public ObservationPolicy {
 public:
  explicit TabularPolicy(int num_actions, double temperature = 1.0);

  using ObservationPolicy::probabilities;
  void probabilities(const Observation& obs, std::span<double> out) const override;

  double temperature() const { return temperature_; }
  const std::map<Observation, std::vector<double>>& logits() const { return logits_; }

  /// Row for `obs`, created as all-zero (uniform) on first access.
  std::vector<double>& row(const Observation& obs);
  const std::vector<double>* find(const Observation& obs) const;
  void set_row(const Observation& obs, std::vector<double> logits);

  /// Content hash of logits and temperature; identifies a snapshot.
  std::uint64_t fingerprint() const override;

  bool operator==(const TabularPolicy& other) const;

 private:
  double temperature_;
  std::map<Observation, std::vector<double>> logits_;
};

/// Fixed action per observation; unseen observations fall back to action 0.
class DeterministicPolicy : public ObservationPolicy {
 public:
  explicit DeterministicPolicy(int num_actions) : ObservationPolicy(num_actions) {}

  using ObservationPolicy::probabilities;
  void probabilities(const Observation& obs, std::span<double> out) const override;
  Action act(const PrivilegedState&, const Observation& obs, RngStream&) const override {
    return action(obs);
  }

  Action action(const Observation& obs) const;
  void set(const Observation& obs, Action a);
  const std::map<Observation, Action>& table() const { return table_; }

 private:
  std::map<Observation, Action> table_;
};

/// Deterministic view that always plays the wrapped policy's argmax.
class GreedyPolicy : public ObservationPolicy {
 public:
  explicit GreedyPolicy(const ObservationPolicy& inner)
      : ObservationPolicy(inner.num_actions()), inner_(inner) {}

  using ObservationPolicy::probabilities;
  void probabilities(const Observation& obs, std::span<double> out) const override;
  Action act(const PrivilegedState&, const Observation& obs, RngStream&) const override {
    return inner_.greedy(obs);
  }
  std::uint64_t fingerprint() const override { return inner_.fingerprint(); }

 private:
  const ObservationPolicy& inner_;
};

/// Linear-softmax policy over environment features: logit_a = w_a . phi(o).
/// Hook for configurations whose observation space is too large for tables.
class LinearSoftmaxPolicy : public ObservationPolicy {
 public:
  LinearSoftmaxPolicy(const ContextualMdp& env, std::size_t feature_dim);

  using ObservationPolicy::probabilities;
  void probabilities(const Observation& obs, std::span<double> out) const override;

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t feature_dim() const { return dim_; }
  std::vector<double> features(const Observation& obs) const { return env_.features(obs); }

 private:
  const ContextualMdp& env_;
  std::size_t dim_;
  std::vector<double> weights_;  // action-major, num_actions x dim
};

/// Numerically stable softmax of logits / temperature.
void softmax(std::span<const double> logits, double temperature, std::span<double> out);

}  // namespace distill
