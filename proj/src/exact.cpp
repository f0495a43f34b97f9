#include "distill/exact.hpp"

#include <cmath>

namespace distill {

ExactModel ExactModel::build(const ContextualMdp& env, std::size_t cap) {
  ExactModel m;
  m.index = StateIndex(enumerate_states(env, cap));
  m.num_actions = env.num_actions();
  m.horizon = env.horizon();
  m.gamma = env.gamma();
  const std::size_t n = m.index.size();
  const int na = m.num_actions;
  m.next.assign(n * na, -1);
  m.reward.assign(n * na, 0.0);
  m.observation.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = m.index[i];
    m.observation.push_back(env.observe(s));
    if (s.base.done) continue;
    for (Action a = 0; a < na; ++a) {
      const Transition tr = env.step(s, a);
      m.reward[i * na + a] = tr.reward;
      if (!tr.terminal) m.next[i * na + a] = static_cast<long>(m.index.at(tr.next));
    }
  }
  const auto prior = env.context_prior();
  for (Context c = 0; c < env.num_contexts(); ++c)
    if (prior[c] > 0.0) m.initial.emplace_back(m.index.at(env.initial(c)), prior[c]);
  return m;
}

namespace {

template <class Real>
Real backward_return(const ExactModel& m, const std::vector<Real>& probs) {
  const std::size_t n = m.index.size();
  const int na = m.num_actions;
  const Real gamma = static_cast<Real>(m.gamma);
  std::vector<Real> v(n, Real(0));
  std::vector<Real> v_next(n, Real(0));
  for (int t = m.horizon - 1; t >= 0; --t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (m.index[i].base.done) {
        v[i] = Real(0);
        continue;
      }
      Real total = 0;
      for (int a = 0; a < na; ++a) {
        const long j = m.next[i * na + a];
        const Real q = static_cast<Real>(m.reward[i * na + a]) + (j < 0 ? Real(0) : gamma * v_next[j]);
        total += probs[i * na + a] * q;
      }
      v[i] = total;
    }
    std::swap(v, v_next);
  }
  Real j = 0;
  for (const auto& [i, w] : m.initial) j += static_cast<Real>(w) * v_next[i];
  return j;
}

std::vector<double> state_probs(const ExactModel& m, const ObservationPolicy& policy) {
  const int na = m.num_actions;
  std::vector<double> probs(m.index.size() * na, 0.0);
  for (std::size_t i = 0; i < m.index.size(); ++i) {
    if (m.index[i].base.done) continue;
    policy.probabilities(m.observation[i], std::span<double>(probs).subspan(i * na, na));
  }
  return probs;
}

}  // namespace

double exact_return(const ExactModel& model, const ObservationPolicy& policy) {
  if (policy.num_actions() != model.num_actions) throw ContractViolation("action count mismatch");
  return backward_return<double>(model, state_probs(model, policy));
}

double exact_return(const ContextualMdp& env, const ObservationPolicy& policy, double gamma) {
  ExactModel model = ExactModel::build(env);
  model.gamma = gamma;
  return exact_return(model, policy);
}

long double exact_return_extended(const ExactModel& model, const TabularPolicy& policy) {
  const int na = model.num_actions;
  std::vector<long double> probs(model.index.size() * na, 0.0L);
  for (std::size_t i = 0; i < model.index.size(); ++i) {
    if (model.index[i].base.done) continue;
    const auto* row = policy.find(model.observation[i]);
    if (!row) {
      for (int a = 0; a < na; ++a) probs[i * na + a] = 1.0L / na;
      continue;
    }
    long double top = (*row)[0];
    for (double x : *row) top = std::max<long double>(top, x);
    long double total = 0;
    for (int a = 0; a < na; ++a) {
      probs[i * na + a] = std::exp(((*row)[a] - top) / static_cast<long double>(policy.temperature()));
      total += probs[i * na + a];
    }
    for (int a = 0; a < na; ++a) probs[i * na + a] /= total;
  }
  return backward_return<long double>(model, probs);
}

LogitGradient exact_gradient(const ExactModel& m, const TabularPolicy& policy) {
  const std::size_t n = m.index.size();
  const int na = m.num_actions;
  const int horizon = m.horizon;
  const auto probs = state_probs(m, policy);

  // Backward pass: Q_t and V_t for every step.
  std::vector<std::vector<double>> q(horizon, std::vector<double>(n * na, 0.0));
  std::vector<std::vector<double>> v(horizon + 1, std::vector<double>(n, 0.0));
  for (int t = horizon - 1; t >= 0; --t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (m.index[i].base.done) continue;
      double total = 0.0;
      for (int a = 0; a < na; ++a) {
        const long j = m.next[i * na + a];
        const double qa = m.reward[i * na + a] + (j < 0 ? 0.0 : m.gamma * v[t + 1][j]);
        q[t][i * na + a] = qa;
        total += probs[i * na + a] * qa;
      }
      v[t][i] = total;
    }
  }

  // Forward pass: discounted occupancy, accumulating the gradient as we go.
  LogitGradient grad;
  std::vector<double> mu(n, 0.0);
  for (const auto& [i, w] : m.initial) mu[i] += w;
  for (int t = 0; t < horizon; ++t) {
    std::vector<double> mu_next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (mu[i] == 0.0 || m.index[i].base.done) continue;
      const Observation& o = m.observation[i];
      if (policy.find(o)) {
        auto& g = grad.try_emplace(o, std::vector<double>(na, 0.0)).first->second;
        for (int k = 0; k < na; ++k)
          g[k] += mu[i] * probs[i * na + k] * (q[t][i * na + k] - v[t][i]) / policy.temperature();
      }
      for (int a = 0; a < na; ++a) {
        const long j = m.next[i * na + a];
        if (j >= 0) mu_next[j] += mu[i] * probs[i * na + a] * m.gamma;
      }
    }
    mu = std::move(mu_next);
  }
  // Rows that exist but are never reached have zero gradient.
  for (const auto& [o, row] : policy.logits()) grad.try_emplace(o, std::vector<double>(na, 0.0));
  return grad;
}

std::map<Observation, double> exact_visitation(const ExactModel& m,
                                               const ObservationPolicy& policy) {
  const std::size_t n = m.index.size();
  const int na = m.num_actions;
  const auto probs = state_probs(m, policy);
  std::map<Observation, double> visits;
  std::vector<double> mu(n, 0.0);
  for (const auto& [i, w] : m.initial) mu[i] += w;
  double total = 0.0;
  for (int t = 0; t < m.horizon; ++t) {
    std::vector<double> mu_next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (mu[i] == 0.0 || m.index[i].base.done) continue;
      visits[m.observation[i]] += mu[i];
      total += mu[i];
      for (int a = 0; a < na; ++a) {
        const long j = m.next[i * na + a];
        if (j >= 0) mu_next[j] += mu[i] * probs[i * na + a];
      }
    }
    mu = std::move(mu_next);
  }
  for (auto& [o, x] : visits) x /= total;
  return visits;
}

}  // namespace distill
