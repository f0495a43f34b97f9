#include "distill/dataset.hpp"

#include <cmath>
#include <limits>

namespace distill {

void AggDataset::append(const DatasetRecord& record) {
  if (record.action < 0 || record.action >= num_actions_)
    throw ContractViolation("dataset label out of range");
  records_.push_back(record);
  support_.insert(record.observation);
}

void AggDataset::append(const AggDataset& other) {
  for (const auto& r : other.records()) append(r);
}

std::map<Observation, std::vector<std::int64_t>> AggDataset::label_counts() const {
  std::map<Observation, std::vector<std::int64_t>> counts;
  for (const auto& r : records_) {
    auto [it, inserted] = counts.try_emplace(r.observation);
    if (inserted) it->second.assign(num_actions_, 0);
    ++it->second[r.action];
  }
  return counts;
}

std::set<Observation> AggDataset::support() const { return support_; }

TabularPolicy bc_fit(const AggDataset& ds, double ridge) {
  if (ds.empty()) throw ContractViolation("bc_fit: empty dataset");
  if (!(ridge >= 0.0)) throw ContractViolation("bc_fit: ridge must be non-negative");
  TabularPolicy policy(ds.num_actions());
  for (const auto& [obs, counts] : ds.label_counts()) {
    double total = 0.0;
    for (auto n : counts) total += static_cast<double>(n);
    const double denom = total + ridge * ds.num_actions();
    std::vector<double> logits(ds.num_actions());
    for (int a = 0; a < ds.num_actions(); ++a) {
      const double p = (static_cast<double>(counts[a]) + ridge) / denom;
      logits[a] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    policy.set_row(obs, std::move(logits));
  }
  return policy;
}

double cross_entropy(const AggDataset& ds, const ObservationPolicy& policy) {
  if (ds.empty()) return 0.0;
  double total = 0.0;
  std::vector<double> probs(policy.num_actions());
  for (const auto& r : ds.records()) {
    policy.probabilities(r.observation, probs);
    total -= std::log(probs[r.action]);
  }
  return total / static_cast<double>(ds.size());
}

}  // namespace distill
