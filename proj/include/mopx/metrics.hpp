#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "mopx/core.hpp"

namespace mopx {

/// Lebesgue measure of the union of boxes [reference, p] over the rows of `points`.
/// Coordinates below the reference are clipped to it. Supports m = 2 (sweep) and m = 3 (slicing);
/// throws UnsupportedDimensionError otherwise.
double hypervolume(const Eigen::MatrixXd& points, const Eigen::VectorXd& reference);

struct SoftReward {
  double raw;
  std::optional<double> normalized;
};

/// mu_1 of the selected arm when mu_2 >= 0.9 tau, else 0; optionally divided by mu_1(x*).
SoftReward soft_constrained_reward(const RewardVector& selected_mean, double tau,
                                   std::optional<double> best_primary = std::nullopt);

/// 100 * HV(true means of estimated_set) / HV(true means of true_front), reference at the origin.
double hv_recovery(const ArmList& estimated_set, const ArmList& true_front, const Eigen::MatrixXd& true_means);

}  // namespace mopx
