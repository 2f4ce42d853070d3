#include "mopx/gaps.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "mopx/errors.hpp"

namespace mopx {

bool dominates(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  bool strict = false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] < v[i]) return false;
    if (u[i] > v[i]) strict = true;
  }
  return strict;
}

ArmList pareto_front(const Eigen::MatrixXd& means) {
  ArmList front;
  const Eigen::Index k = means.rows();
  for (Eigen::Index x = 0; x < k; ++x) {
    bool dominated = false;
    for (Eigen::Index y = 0; y < k && !dominated; ++y) {
      if (y != x && dominates(means.row(y).transpose(), means.row(x).transpose())) dominated = true;
    }
    if (!dominated) front.push_back(static_cast<ArmId>(x));
  }
  return front;
}

double dominance_margin(const Eigen::MatrixXd& means, ArmId x, ArmId y) {
  return (means.row(static_cast<Eigen::Index>(y)) - means.row(static_cast<Eigen::Index>(x))).minCoeff();
}

double excess_margin(const Eigen::MatrixXd& means, ArmId x, ArmId y) {
  return (means.row(static_cast<Eigen::Index>(x)) - means.row(static_cast<Eigen::Index>(y))).maxCoeff();
}

std::vector<ParetoGapEntry> pareto_gaps(const Eigen::MatrixXd& means) {
  const auto k = static_cast<std::size_t>(means.rows());
  if (k < 2) throw DomainError("pareto_gaps needs K >= 2 arms");
  const ArmList front = pareto_front(means);
  std::vector<bool> in_front(k, false);
  for (ArmId a : front) in_front[a] = true;

  std::vector<ParetoGapEntry> out(k);
  for (ArmId x = 0; x < k; ++x) {
    out[x].arm = x;
    out[x].on_front = in_front[x];
    if (in_front[x]) continue;
    double best = -kUnboundedGap;
    for (ArmId y : front) best = std::max(best, dominance_margin(means, x, y));
    out[x].max_dominance = best;
    out[x].gap = best;
  }
  for (ArmId x : front) {
    auto& e = out[x];
    for (ArmId y : front) {
      if (y == x) continue;
      e.delta_plus = std::min(e.delta_plus, std::min(excess_margin(means, x, y), excess_margin(means, y, x)));
    }
    for (ArmId y = 0; y < k; ++y) {
      if (in_front[y]) continue;
      e.delta_minus = std::min(e.delta_minus, std::max(excess_margin(means, y, x), 0.0) + out[y].gap);
    }
    e.gap = std::min(e.delta_plus, e.delta_minus);
  }
  return out;
}

ParetoGapEntry pareto_gap(const Eigen::MatrixXd& means, ArmId x) {
  if (x >= static_cast<std::size_t>(means.rows())) throw DomainError("pareto_gap: arm out of range");
  return pareto_gaps(means)[x];
}

namespace {
void require_two_objectives(const Eigen::MatrixXd& means) {
  if (means.cols() != 2) {
    throw DomainError("constrained gaps support m = 2 objectives, got m=" + std::to_string(means.cols()));
  }
}
}  // namespace

ArmId best_feasible_arm(const Eigen::MatrixXd& means, double tau) {
  require_two_objectives(means);
  std::optional<ArmId> best;
  for (Eigen::Index x = 0; x < means.rows(); ++x) {
    if (means(x, 1) < tau) continue;
    if (!best || means(x, 0) > means(static_cast<Eigen::Index>(*best), 0)) best = static_cast<ArmId>(x);
  }
  if (!best) throw InstanceError("no feasible arm: every mu_2 is below tau=" + std::to_string(tau));
  return *best;
}

std::vector<ConstrainedGapEntry> constrained_gaps(const Eigen::MatrixXd& means, double tau) {
  const ArmId star = best_feasible_arm(means, tau);
  const auto s = static_cast<Eigen::Index>(star);
  const double margin = means(s, 1) - tau;
  std::vector<ConstrainedGapEntry> out(static_cast<std::size_t>(means.rows()));
  for (Eigen::Index x = 0; x < means.rows(); ++x) {
    auto& e = out[static_cast<std::size_t>(x)];
    e.arm = static_cast<ArmId>(x);
    e.best_arm = star;
    e.violation = std::max(tau - means(x, 1), 0.0);
    e.suboptimality = means(s, 0) - means(x, 0);
    e.delta = std::max(e.violation, e.suboptimality);
    if (e.arm == star) {
      e.classification = ConstrainedClass::Optimal;
      e.gap = 0.0;
    } else {
      e.classification = means(x, 1) >= tau ? ConstrainedClass::Feasible : ConstrainedClass::Infeasible;
      e.gap = std::min(e.delta, margin);
    }
  }
  return out;
}

ConstrainedGapEntry constrained_gap(const Eigen::MatrixXd& means, double tau, ArmId x) {
  if (x >= static_cast<std::size_t>(means.rows())) throw DomainError("constrained_gap: arm out of range");
  return constrained_gaps(means, tau)[x];
}

double hardness(const Eigen::MatrixXd& means, double tau) {
  if (means.rows() < 2) throw DomainError("hardness needs K >= 2 arms");
  double h = 0.0;
  for (const auto& e : constrained_gaps(means, tau)) {
    if (e.classification == ConstrainedClass::Optimal) continue;
    if (!(e.gap > 0.0)) {
      throw InstanceError("degenerate instance: arm " + std::to_string(e.arm) + " has zero constrained gap");
    }
    h = std::max(h, 1.0 / (e.gap * e.gap));
  }
  return h;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& means, const ArmList& arms) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(arms.size()), means.cols());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = means.row(static_cast<Eigen::Index>(arms[i]));
  }
  return out;
}

}  // namespace mopx
