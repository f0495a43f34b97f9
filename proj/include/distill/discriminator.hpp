#pragma once

#include <map>
#include <span>

#include "distill/cmdp.hpp"

namespace distill {

/// Per-observation teacher-likeness score G in [0, 1].
///
/// Stores the teacher and student visit counts from its last training call;
/// the score is the closed-form minimiser of the per-observation logistic
/// loss with labels teacher = 1, student = 0, Laplace-smoothed.
class Discriminator {
 public:
  explicit Discriminator(double kappa = 0.5, double smoothing = 1.0);

  double kappa() const { return kappa_; }
  double smoothing() const { return smoothing_; }

  double score(const Observation& obs) const;
  /// True when the score falls below the query threshold.
  bool is_critical(const Observation& obs) const { return score(obs) < kappa_; }

  /// Mean score along a trajectory's observations (0.5 for an empty one).
  double trajectory_score(const Trajectory& traj) const;

  struct Counts {
    std::int64_t teacher = 0;
    std::int64_t student = 0;
  };
  const std::map<Observation, Counts>& counts() const { return counts_; }

 private:
  friend Discriminator train_discriminator(const Discriminator&, std::span<const Observation>,
                                           std::span<const Observation>);
  double kappa_;
  double smoothing_;
  std::map<Observation, Counts> counts_;
};

/// Refits the score table from fresh teacher and student observation
/// multisets, keeping kappa and smoothing.
Discriminator train_discriminator(const Discriminator& d, std::span<const Observation> teacher_obs,
                                  std::span<const Observation> student_obs);

/// Discriminator logistic loss on the two samples (labels teacher = 1).
double discriminator_loss(const Discriminator& d, std::span<const Observation> teacher_obs,
                          std::span<const Observation> student_obs);

}  // namespace distill
