#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mopx/core.hpp"
#include "mopx/errors.hpp"

namespace mopx {

/// Number of pulls per active arm; counts[i] belongs to arms[i].
struct PullCounts {
  ArmList arms;
  std::vector<long> counts;
  std::optional<std::string> warning;

  long total() const;
  long count_of(ArmId arm) const;
};

/// Uniform split of n pulls; the remainder goes to the lowest-index arms.
/// Throws DomainError for an empty active set or n < 1.
PullCounts allocate_uniform(long n, const ArmList& active);

/// Pull order for a uniform allocation: round-robin by ascending index.
std::vector<ArmId> round_robin_sequence(const PullCounts& counts);

/// Pull order for a design allocation: the t-th pull goes to arm i iff
/// t lies in (sum_{j<i} N_j, sum_{j<=i} N_j].
std::vector<ArmId> block_sequence(const PullCounts& counts);

/// Simplex weights over the active arms (rows of the feature matrix passed to the solver).
struct DesignWeights {
  Eigen::VectorXd weights;
  double objective_value = 0.0;  // max_x phi(x)^T A(w)^dagger phi(x)
  std::size_t active_dim = 0;    // dimension of span{phi(x)}
  int iterations = 0;
  std::vector<double> best_objective_trace;  // best objective after each iteration
};

/// Raised when mirror descent hits the iteration cap; carries the best design found.
class DesignNotConverged : public NumericalError {
 public:
  DesignNotConverged(const std::string& what, DesignWeights best)
      : NumericalError(what), best_(std::move(best)) {}
  const DesignWeights& best() const { return best_; }

 private:
  DesignWeights best_;
};

struct GOptimalOptions {
  int max_iterations = 5000;
  double step_scale = 0.5;
};

/// A(w) = sum_i w_i phi_i phi_i^T restricted to the active span.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights);
/// max_i phi_i^T A(w)^dagger phi_i, with the same pseudo-inverse as the linear estimator.
double g_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights);

/// Entropic mirror descent on the G-optimal relaxation. `features` has one row per active arm.
/// Stops once the objective is <= (1 + epsilon) * d_act; throws DesignNotConverged otherwise.
DesignWeights solve_g_optimal(const Eigen::MatrixXd& features, double epsilon, const GOptimalOptions& options = {});

/// Integer apportionment of n pulls: largest remainder on n * w_i (ties to the lowest index),
/// then every arm of the greedy feature basis is lifted to at least one pull by taking pulls
/// from the largest count. `features` rows align with `active`.
/// Throws ConfigError when kappa is outside (0, 1/3], or when `enforce_min_pulls` is set and
/// n < 45 * d_act.
PullCounts round_design(long n, const DesignWeights& weights, double kappa, const ArmList& active,
                        const Eigen::MatrixXd& features, bool enforce_min_pulls = true);

enum class AllocatorKind { Uniform, GOptimal };

AllocatorKind parse_allocator(std::string_view name);
std::string to_string(AllocatorKind kind);

struct AllocatorConfig {
  AllocatorKind kind = AllocatorKind::Uniform;
  double epsilon = 0.1;
  double kappa = 1.0 / 3.0;
  bool enforce_min_pulls = true;
};

struct Allocation {
  PullCounts counts;
  std::vector<ArmId> sequence;
  std::optional<double> design_objective;
  std::vector<std::string> warnings;
};

/// Allocator step of the elimination loop. `features` is K x d (unused by the uniform allocator).
/// A design that misses the tolerance within the iteration cap is used anyway, with a warning.
Allocation allocate(const AllocatorConfig& config, long n, const ArmList& active, const Eigen::MatrixXd& features);

}  // namespace mopx
