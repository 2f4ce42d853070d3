#include "mopx/allocators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mopx/estimators.hpp"

namespace mopx {

long PullCounts::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

long PullCounts::count_of(ArmId arm) const {
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i] == arm) return counts[i];
  }
  return 0;
}

PullCounts allocate_uniform(long n, const ArmList& active) {
  if (active.empty()) throw DomainError("allocate_uniform: empty active set");
  if (n < 1) throw DomainError("allocate_uniform: need n >= 1 pulls");
  PullCounts out;
  out.arms = active;
  std::sort(out.arms.begin(), out.arms.end());
  const auto k = static_cast<long>(out.arms.size());
  out.counts.assign(out.arms.size(), n / k);
  for (long i = 0; i < n % k; ++i) ++out.counts[static_cast<std::size_t>(i)];
  if (n < k) {
    out.warning = "budget n=" + std::to_string(n) + " is smaller than the active set (" + std::to_string(k) +
                  " arms); some arms get no pull";
  }
  return out;
}

std::vector<ArmId> round_robin_sequence(const PullCounts& counts) {
  std::vector<ArmId> seq;
  seq.reserve(static_cast<std::size_t>(counts.total()));
  std::vector<long> left = counts.counts;
  bool any = true;
  while (any) {
    any = false;
    for (std::size_t i = 0; i < left.size(); ++i) {
      if (left[i] > 0) {
        seq.push_back(counts.arms[i]);
        --left[i];
        any = true;
      }
    }
  }
  return seq;
}

std::vector<ArmId> block_sequence(const PullCounts& counts) {
  std::vector<ArmId> seq;
  seq.reserve(static_cast<std::size_t>(counts.total()));
  for (std::size_t i = 0; i < counts.arms.size(); ++i) {
    seq.insert(seq.end(), static_cast<std::size_t>(counts.counts[i]), counts.arms[i]);
  }
  return seq;
}

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights) {
  return features.transpose() * weights.asDiagonal() * features;
}

namespace {

struct Leverage {
  Eigen::MatrixXd pinv;
  Eigen::VectorXd values;
  Eigen::Index argmax = 0;
};

Leverage leverages(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights) {
  Leverage lev;
  lev.pinv = pseudo_inverse(design_matrix(features, weights), features);
  lev.values = (features * lev.pinv).cwiseProduct(features).rowwise().sum();
  lev.values.maxCoeff(&lev.argmax);  // first maximum, i.e. lowest index
  return lev;
}

}  // namespace

double g_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights) {
  return leverages(features, weights).values.maxCoeff();
}

DesignWeights solve_g_optimal(const Eigen::MatrixXd& features, double epsilon, const GOptimalOptions& options) {
  if (features.rows() == 0) throw DomainError("solve_g_optimal: empty active set");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("g_optimal.epsilon must lie in (0, 1)");
  const std::size_t d_act = select_basis(features).size();
  if (d_act == 0) throw DomainError("solve_g_optimal: active features span only the zero vector");

  const Eigen::Index k = features.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  const double target = (1.0 + epsilon) * static_cast<double>(d_act);

  DesignWeights best;
  best.active_dim = d_act;
  best.objective_value = std::numeric_limits<double>::infinity();

  for (int it = 0; it <= options.max_iterations; ++it) {
    const Leverage lev = leverages(features, w);
    const double obj = lev.values[lev.argmax];
    if (obj < best.objective_value) {
      best.objective_value = obj;
      best.weights = w;
    }
    best.iterations = it;
    if (it > 0) best.best_objective_trace.push_back(best.objective_value);
    if (best.objective_value <= target) return best;
    if (it == options.max_iterations) break;

    // Subgradient of max_x phi_x^T A^dagger phi_x at the maximizing arm.
    const Eigen::VectorXd cross = features * (lev.pinv * features.row(lev.argmax).transpose());
    const Eigen::VectorXd grad = -cross.cwiseAbs2();
    const double scale = grad.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) break;
    const double eta = options.step_scale / scale;
    w = (w.array() * (-eta * grad.array()).exp()).matrix();
    w /= w.sum();
  }
  throw DesignNotConverged("solve_g_optimal: objective " + std::to_string(best.objective_value) +
                               " above (1+eps)*d_act=" + std::to_string(target) + " after " +
                               std::to_string(options.max_iterations) + " iterations",
                           best);
}

PullCounts round_design(long n, const DesignWeights& design, double kappa, const ArmList& active,
                        const Eigen::MatrixXd& features, bool enforce_min_pulls) {
  if (!(kappa > 0.0 && kappa <= 1.0 / 3.0)) throw ConfigError("g_optimal.kappa must lie in (0, 1/3]");
  const auto k = active.size();
  if (k == 0 || static_cast<std::size_t>(design.weights.size()) != k ||
      static_cast<std::size_t>(features.rows()) != k) {
    throw DomainError("round_design: weights, features and active set must have matching sizes");
  }
  const auto basis = select_basis(features);
  if (enforce_min_pulls && n < 45L * static_cast<long>(basis.size())) {
    throw ConfigError("round budget n=" + std::to_string(n) + " is below the bound n >= 45*d_act=" +
                      std::to_string(45L * static_cast<long>(basis.size())));
  }
  if (n < static_cast<long>(basis.size())) {
    throw ConfigError("round budget n=" + std::to_string(n) + " cannot cover a feature basis of size " +
                      std::to_string(basis.size()));
  }

  PullCounts out;
  out.arms = active;
  out.counts.assign(k, 0);
  std::vector<double> frac(k);
  long assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double share = static_cast<double>(n) * design.weights[static_cast<Eigen::Index>(i)];
    const double fl = std::floor(share + 1e-12);
    out.counts[i] = static_cast<long>(fl);
    frac[i] = std::max(0.0, share - fl);
    assigned += out.counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(frac[a] - frac[b]) > 1e-12) return frac[a] > frac[b];
    return active[a] < active[b];
  });
  for (std::size_t j = 0; assigned < n; j = (j + 1) % k) {
    ++out.counts[order[j]];
    ++assigned;
  }
  while (assigned > n) {  // weights summing slightly above 1
    auto it = std::max_element(out.counts.begin(), out.counts.end());
    --*it;
    --assigned;
  }

  // Basis coverage: lift zero-count basis arms to one pull, paid by the largest count.
  for (std::size_t b : basis) {
    if (out.counts[b] > 0) continue;
    std::size_t donor = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (out.counts[i] > out.counts[donor]) donor = i;
    }
    --out.counts[donor];
    out.counts[b] = 1;
  }
  return out;
}

AllocatorKind parse_allocator(std::string_view name) {
  if (name == "uniform") return AllocatorKind::Uniform;
  if (name == "g-optimal" || name == "g_optimal") return AllocatorKind::GOptimal;
  throw ConfigError("unknown allocator '" + std::string(name) + "' (expected uniform or g-optimal)");
}

std::string to_string(AllocatorKind kind) { return kind == AllocatorKind::Uniform ? "uniform" : "g-optimal"; }

Allocation allocate(const AllocatorConfig& config, long n, const ArmList& active, const Eigen::MatrixXd& features) {
  Allocation out;
  if (config.kind == AllocatorKind::Uniform) {
    out.counts = allocate_uniform(n, active);
    out.sequence = round_robin_sequence(out.counts);
    if (out.counts.warning) out.warnings.push_back(*out.counts.warning);
    return out;
  }

  ArmList sorted = active;
  std::sort(sorted.begin(), sorted.end());
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(sorted.size()), features.cols());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(sorted[i]));
  }
  DesignWeights design;
  try {
    design = solve_g_optimal(sub, config.epsilon);
  } catch (const DesignNotConverged& e) {
    design = e.best();
    out.warnings.emplace_back(e.what());
  }
  out.design_objective = design.objective_value;
  out.counts = round_design(n, design, config.kappa, sorted, sub, config.enforce_min_pulls);
  out.sequence = block_sequence(out.counts);
  return out;
}

}  // namespace mopx
