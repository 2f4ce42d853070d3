#include "mopx/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "mopx/errors.hpp"
#include "mopx/gaps.hpp"

namespace mopx {

namespace {

struct P2 {
  double x, y;
};

// Area dominated by 2-D points above the (0, 0) corner; points already shifted and clipped.
double sweep_2d(std::vector<P2> pts) {
  std::sort(pts.begin(), pts.end(), [](const P2& a, const P2& b) { return a.x > b.x || (a.x == b.x && a.y > b.y); });
  double area = 0.0;
  double covered_y = 0.0;
  for (const auto& p : pts) {
    if (p.y > covered_y) {
      area += p.x * (p.y - covered_y);
      covered_y = p.y;
    }
  }
  return area;
}

}  // namespace

double hypervolume(const Eigen::MatrixXd& points, const Eigen::VectorXd& reference) {
  const auto m = points.cols();
  if (reference.size() != m && points.rows() > 0) throw DomainError("hypervolume: reference dimension mismatch");
  if (m != 2 && m != 3) {
    throw UnsupportedDimensionError("hypervolume supports m = 2 or 3, got m=" + std::to_string(m));
  }
  if (points.rows() == 0) return 0.0;
  const Eigen::MatrixXd shifted = (points.rowwise() - reference.transpose()).cwiseMax(0.0);

  if (m == 2) {
    std::vector<P2> pts;
    for (Eigen::Index i = 0; i < shifted.rows(); ++i) pts.push_back({shifted(i, 0), shifted(i, 1)});
    return sweep_2d(std::move(pts));
  }

  // m = 3: slabs between consecutive z levels, each with the 2-D front of points at or above it.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(shifted.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return shifted(a, 2) > shifted(b, 2); });
  double volume = 0.0;
  std::vector<P2> slice;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto idx = order[i];
    slice.push_back({shifted(idx, 0), shifted(idx, 1)});
    const double z_hi = shifted(idx, 2);
    const double z_lo = i + 1 < order.size() ? shifted(order[i + 1], 2) : 0.0;
    if (z_hi > z_lo) volume += (z_hi - z_lo) * sweep_2d(slice);
  }
  return volume;
}

SoftReward soft_constrained_reward(const RewardVector& selected_mean, double tau, std::optional<double> best_primary) {
  if (!(tau > 0.0)) throw MetricError("soft constrained reward needs tau > 0");
  if (selected_mean.size() < 2) throw MetricError("soft constrained reward needs two objectives");
  SoftReward out{selected_mean[1] >= 0.9 * tau ? selected_mean[0] : 0.0, std::nullopt};
  if (best_primary) {
    if (!(*best_primary > 0.0)) throw MetricError("cannot normalize by mu_1(x*) <= 0");
    out.normalized = out.raw / *best_primary;
  }
  return out;
}

double hv_recovery(const ArmList& estimated_set, const ArmList& true_front, const Eigen::MatrixXd& true_means) {
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(true_means.cols());
  const double truth = hypervolume(select_rows(true_means, true_front), origin);
  if (!(truth > 0.0)) throw MetricError("ground-truth Pareto set has zero hypervolume");
  return 100.0 * hypervolume(select_rows(true_means, estimated_set), origin) / truth;
}

}  // namespace mopx
