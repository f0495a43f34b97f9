#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "distill/cmdp.hpp"
#include "distill/policy.hpp"

namespace distill {

struct DatasetRecord {
  Observation observation;
  Action action = 0;
  /// Context the teacher saw when labelling; analysis only.
  Context context = 0;
  int iteration = 0;

  bool operator==(const DatasetRecord&) const = default;
};

/// Append-only multiset of teacher labels on student observations.
class AggDataset {
 public:
  explicit AggDataset(int num_actions) : num_actions_(num_actions) {}

  void append(const DatasetRecord& record);
  void append(const AggDataset& other);

  int num_actions() const { return num_actions_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<DatasetRecord>& records() const { return records_; }

  /// Label histogram per observation.
  std::map<Observation, std::vector<std::int64_t>> label_counts() const;
  std::set<Observation> support() const;
  bool contains(const Observation& obs) const { return support_.contains(obs); }

  bool operator==(const AggDataset&) const = default;

 private:
  int num_actions_;
  std::vector<DatasetRecord> records_;
  std::set<Observation> support_;
};

/// Per-observation log of Laplace-smoothed label frequencies. With ridge 0
/// unseen labels get -inf logits and the fit is the exact empirical
/// conditional, which minimises the dataset cross-entropy.
TabularPolicy bc_fit(const AggDataset& ds, double ridge = 0.1);

/// Mean negative log-likelihood of the dataset labels under `policy`.
double cross_entropy(const AggDataset& ds, const ObservationPolicy& policy);

}  // namespace distill
