#pragma once

#include <map>
#include <vector>

#include "distill/cmdp.hpp"
#include "distill/environments.hpp"
#include "distill/policy.hpp"

namespace distill {

/// Enumerated state space with a dense successor table, shared by the
/// exact evaluators.
struct ExactModel {
  StateIndex index;
  int num_actions = 0;
  int horizon = 0;
  double gamma = 1.0;
  std::vector<long> next;  // -1 on terminal transitions
  std::vector<double> reward;
  std::vector<Observation> observation;
  /// (state index, prior weight) of every initial state.
  std::vector<std::pair<std::size_t, double>> initial;

  static ExactModel build(const ContextualMdp& env, std::size_t cap = 200'000);
};

/// Expected discounted return over the horizon, by backward induction over
/// (privileged state, step) with the policy's action distributions.
double exact_return(const ContextualMdp& env, const ObservationPolicy& policy, double gamma);
double exact_return(const ExactModel& model, const ObservationPolicy& policy);
/// Same recursion carried out in extended precision on a tabular softmax
/// policy; used for finite-difference checks.
long double exact_return_extended(const ExactModel& model, const TabularPolicy& policy);

using LogitGradient = std::map<Observation, std::vector<double>>;

/// Gradient of exact_return with respect to every tabular logit, from the
/// discounted occupancy times the per-step advantage of each action.
LogitGradient exact_gradient(const ExactModel& model, const TabularPolicy& policy);

/// Expected number of visits to each observation per episode (terminal
/// absorbing states excluded), normalised to a distribution.
std::map<Observation, double> exact_visitation(const ExactModel& model,
                                               const ObservationPolicy& policy);

}  // namespace distill
