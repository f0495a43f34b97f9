#include "distill/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "distill/teacher.hpp"

namespace distill {

void softmax(std::span<const double> logits, double temperature, std::span<double> out) {
  const double top = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(top)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / temperature);
    total += out[i];
  }
  for (double& p : out) p /= total;
}

std::vector<double> ObservationPolicy::probabilities(const Observation& obs) const {
  std::vector<double> out(num_actions_);
  probabilities(obs, out);
  return out;
}

Action ObservationPolicy::greedy(const Observation& obs) const {
  return argmax_lowest(probabilities(obs));
}

Action ObservationPolicy::act(const PrivilegedState&, const Observation& obs,
                              RngStream& rng) const {
  return static_cast<Action>(rng.categorical(probabilities(obs)));
}

TabularPolicy::TabularPolicy(int num_actions, double temperature)
    : ObservationPolicy(num_actions), temperature_(temperature) {
  if (num_actions < 1) throw ContractViolation("policy needs at least one action");
  if (!(temperature > 0.0)) throw ContractViolation("temperature must be positive");
}

void TabularPolicy::probabilities(const Observation& obs, std::span<double> out) const {
  auto it = logits_.find(obs);
  if (it == logits_.end()) {
    std::fill(out.begin(), out.end(), 1.0 / num_actions());
    return;
  }
  softmax(it->second, temperature_, out);
}

std::vector<double>& TabularPolicy::row(const Observation& obs) {
  auto [it, inserted] = logits_.try_emplace(obs);
  if (inserted) it->second.assign(num_actions(), 0.0);
  return it->second;
}

const std::vector<double>* TabularPolicy::find(const Observation& obs) const {
  auto it = logits_.find(obs);
  return it == logits_.end() ? nullptr : &it->second;
}

void TabularPolicy::set_row(const Observation& obs, std::vector<double> logits) {
  if (static_cast<int>(logits.size()) != num_actions())
    throw ContractViolation("logit row has the wrong length");
  logits_[obs] = std::move(logits);
}

std::uint64_t TabularPolicy::fingerprint() const {
  std::uint64_t h = splitmix64(std::bit_cast<std::uint64_t>(temperature_));
  for (const auto& [o, row] : logits_) {
    h = splitmix64(h ^ StateHash{}(o));
    for (double x : row) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x));
  }
  return h;
}

bool TabularPolicy::operator==(const TabularPolicy& other) const {
  if (num_actions() != other.num_actions() || temperature_ != other.temperature_) return false;
  if (logits_.size() != other.logits_.size()) return false;
  for (auto a = logits_.begin(), b = other.logits_.begin(); a != logits_.end(); ++a, ++b) {
    if (a->first != b->first) return false;
    for (std::size_t i = 0; i < a->second.size(); ++i)
      if (std::bit_cast<std::uint64_t>(a->second[i]) != std::bit_cast<std::uint64_t>(b->second[i]))
        return false;
  }
  return true;
}

void DeterministicPolicy::probabilities(const Observation& obs, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[action(obs)] = 1.0;
}

Action DeterministicPolicy::action(const Observation& obs) const {
  auto it = table_.find(obs);
  return it == table_.end() ? 0 : it->second;
}

void DeterministicPolicy::set(const Observation& obs, Action a) {
  if (a < 0 || a >= num_actions()) throw ContractViolation("action index out of range");
  table_[obs] = a;
}

void GreedyPolicy::probabilities(const Observation& obs, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[inner_.greedy(obs)] = 1.0;
}

LinearSoftmaxPolicy::LinearSoftmaxPolicy(const ContextualMdp& env, std::size_t feature_dim)
    : ObservationPolicy(env.num_actions()),
      env_(env),
      dim_(feature_dim),
      weights_(static_cast<std::size_t>(env.num_actions()) * feature_dim, 0.0) {}

void LinearSoftmaxPolicy::probabilities(const Observation& obs, std::span<double> out) const {
  const auto phi = env_.features(obs);
  if (phi.size() != dim_) throw ContractViolation("feature dimension mismatch");
  std::vector<double> logits(num_actions(), 0.0);
  for (int a = 0; a < num_actions(); ++a)
    for (std::size_t k = 0; k < dim_; ++k) logits[a] += weights_[a * dim_ + k] * phi[k];
  softmax(logits, 1.0, out);
}

}  // namespace distill
