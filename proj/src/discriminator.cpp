#include "distill/discriminator.hpp"

#include <algorithm>
#include <cmath>

namespace distill {

Discriminator::Discriminator(double kappa, double smoothing)
    : kappa_(kappa), smoothing_(smoothing) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ContractViolation("kappa must lie in (0, 1)");
  if (!(smoothing >= 0.0)) throw ContractViolation("smoothing must be non-negative");
}

double Discriminator::score(const Observation& obs) const {
  auto it = counts_.find(obs);
  const double nt = it == counts_.end() ? 0.0 : static_cast<double>(it->second.teacher);
  const double ns = it == counts_.end() ? 0.0 : static_cast<double>(it->second.student);
  const double denom = nt + ns + 2.0 * smoothing_;
  if (denom <= 0.0) return 0.5;
  return (nt + smoothing_) / denom;
}

double Discriminator::trajectory_score(const Trajectory& traj) const {
  if (traj.steps.empty()) return 0.5;
  double total = 0.0;
  for (const auto& step : traj.steps) total += score(step.observation);
  return total / static_cast<double>(traj.steps.size());
}

Discriminator train_discriminator(const Discriminator& d, std::span<const Observation> teacher_obs,
                                  std::span<const Observation> student_obs) {
  Discriminator out(d.kappa(), d.smoothing());
  for (const auto& o : teacher_obs) ++out.counts_[o].teacher;
  for (const auto& o : student_obs) ++out.counts_[o].student;
  return out;
}

double discriminator_loss(const Discriminator& d, std::span<const Observation> teacher_obs,
                          std::span<const Observation> student_obs) {
  double loss = 0.0;
  constexpr double kFloor = 1e-300;
  for (const auto& o : teacher_obs) loss -= std::log(std::max(d.score(o), kFloor));
  for (const auto& o : student_obs) loss -= std::log(std::max(1.0 - d.score(o), kFloor));
  const auto n = teacher_obs.size() + student_obs.size();
  return n == 0 ? 0.0 : loss / static_cast<double>(n);
}

}  // namespace distill
