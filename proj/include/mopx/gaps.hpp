#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

#include "mopx/core.hpp"

namespace mopx {

/// Sentinel for gaps that are unbounded (empty min). Compares greater than every finite gap.
inline constexpr double kUnboundedGap = std::numeric_limits<double>::infinity();

/// u Pareto-dominates v: u >= v everywhere and u > v somewhere.
bool dominates(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Row indices of the non-dominated rows of `means` (K x m). Equal rows do not dominate
/// each other, so duplicates of a front point all stay.
ArmList pareto_front(const Eigen::MatrixXd& means);

/// min_i (mu_i(y) - mu_i(x)): how far y dominates x.
double dominance_margin(const Eigen::MatrixXd& means, ArmId x, ArmId y);
/// max_i (mu_i(x) - mu_i(y)).
double excess_margin(const Eigen::MatrixXd& means, ArmId x, ArmId y);

struct ParetoGapEntry {
  ArmId arm = 0;
  bool on_front = false;
  double gap = 0.0;
  /// Non-front arms: max_{y in front} m(x, y) (equals gap).
  double max_dominance = 0.0;
  /// Front arms only; kUnboundedGap when the min ranges over an empty set.
  double delta_plus = kUnboundedGap;
  double delta_minus = kUnboundedGap;
};

/// Pareto gaps of every arm in one pass. Requires K >= 2.
std::vector<ParetoGapEntry> pareto_gaps(const Eigen::MatrixXd& means);
ParetoGapEntry pareto_gap(const Eigen::MatrixXd& means, ArmId x);

enum class ConstrainedClass { Optimal, Feasible, Infeasible };

struct ConstrainedGapEntry {
  ArmId arm = 0;
  ConstrainedClass classification = ConstrainedClass::Feasible;
  double violation = 0.0;      // max(tau - mu_2, 0)
  double suboptimality = 0.0;  // mu_1(x*) - mu_1(x), may be negative
  double delta = 0.0;          // max(violation, suboptimality)
  double gap = 0.0;            // min(delta, mu_2(x*) - tau)
  ArmId best_arm = 0;
};

/// argmax of mu_1 over arms with mu_2 >= tau, lowest index on ties. Throws InstanceError if none.
ArmId best_feasible_arm(const Eigen::MatrixXd& means, double tau);

/// Constrained gaps for a K x 2 mean matrix.
std::vector<ConstrainedGapEntry> constrained_gaps(const Eigen::MatrixXd& means, double tau);
ConstrainedGapEntry constrained_gap(const Eigen::MatrixXd& means, double tau, ArmId x);

/// max over non-optimal arms of 1 / gap^2. Throws InstanceError when some such gap is zero.
double hardness(const Eigen::MatrixXd& means, double tau);

/// Rows of `means` for the given arms, in order.
Eigen::MatrixXd select_rows(const Eigen::MatrixXd& means, const ArmList& arms);

}  // namespace mopx
