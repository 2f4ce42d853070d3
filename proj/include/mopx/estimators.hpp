#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mopx/core.hpp"
#include "mopx/rng.hpp"

namespace mopx {

// ---------------------------------------------------------------------------
// Linear algebra shared by the allocator and the linear estimator.
// ---------------------------------------------------------------------------

/// Indices of a maximal linearly independent subset of the rows of `rows`, chosen by greedy
/// Gram-Schmidt in ascending row order. A row joins the basis when its residual norm exceeds
/// tol * max(1, |row|).
std::vector<std::size_t> select_basis(const Eigen::MatrixXd& rows, double tol = 1e-9);

/// Restricted pseudo-inverse Phi (Phi^T V Phi)^{-1} Phi^T, where the columns of Phi are the
/// greedy basis of `active_features` (one feature per row). Throws NumericalError when
/// Phi^T V Phi has condition number above 1e12.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& active_features);

// ---------------------------------------------------------------------------
// Sample mean
// ---------------------------------------------------------------------------

/// Coordinate-wise mean of every observation of each active arm.
MeanEstimates estimate_sample_mean(const ObservationBatch& batch, const ArmList& active);

// ---------------------------------------------------------------------------
// Linear least squares
// ---------------------------------------------------------------------------

struct LinearFit {
  Eigen::MatrixXd theta_hat;  // d x m
  Eigen::MatrixXd gram;       // V = X^T X
  Eigen::MatrixXd gram_pinv;  // V^dagger
  std::vector<ArmId> basis_arms;
};

/// theta_hat = V^dagger X^T Y from the rows of a single round. The basis Phi is drawn from the
/// distinct pulled arms in ascending index.
LinearFit fit_linear(const ObservationBatch& round_batch);

MeanEstimates predict_linear(const LinearFit& fit, const ArmList& arms, const Eigen::MatrixXd& features);

// ---------------------------------------------------------------------------
// One-hidden-layer ReLU network
// ---------------------------------------------------------------------------

struct MlpParams {
  Eigen::MatrixXd w1;  // h x d
  Eigen::VectorXd b1;  // h
  Eigen::MatrixXd w2;  // m x h
  Eigen::VectorXd b2;  // m

  static MlpParams zeros(std::size_t d, std::size_t hidden, std::size_t m);
  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
  double squared_norm() const;
  bool all_finite() const;
};

struct MlpLossGrad {
  double loss;
  MlpParams grad;
};

/// Loss (1/n) sum ||g(phi_t) - f_t||^2 + lambda ||params||^2 and its exact gradient (ReLU'(0) = 0).
/// Inputs are row-major: x is n x d, y is n x m.
MlpLossGrad mlp_loss_grad(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda);
MlpLossGrad mlp_loss_grad(const MlpParams& params, const ObservationBatch& batch, double lambda);

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x);

enum class MlpDataScope { Cumulative, CurrentRound };

struct MlpConfig {
  std::size_t hidden = 30;
  double lambda = 1e-4;
  int iters = 2000;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int checkpoint_every = 100;
  MlpDataScope scope = MlpDataScope::Cumulative;
};

struct MlpFitResult {
  MlpParams params;
  std::vector<double> checkpoint_losses;  // loss at iteration 0, every checkpoint, and the end
};

/// Symmetric uniform fan-in initialization: entries in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
MlpParams mlp_init(std::size_t d, std::size_t hidden, std::size_t m, RngStream& rng);

/// Full-batch Adam on the regularized loss. Starts from `warm_start` when given, else from
/// mlp_init(rng). Throws NumericalError naming the iteration when the loss turns NaN.
MlpFitResult mlp_fit(const ObservationBatch& batch, const MlpConfig& config, RngStream& rng,
                     const std::optional<MlpParams>& warm_start = std::nullopt);

MeanEstimates mlp_predict(const MlpParams& params, const ArmList& arms, const Eigen::MatrixXd& features);

// ---------------------------------------------------------------------------
// Pluggable estimator used by the elimination loops
// ---------------------------------------------------------------------------

enum class EstimatorKind { Mean, Linear, Mlp };

EstimatorKind parse_estimator(std::string_view name);
std::string to_string(EstimatorKind kind);

class Estimator {
 public:
  virtual ~Estimator() = default;
  /// Estimates for every active arm after the given round. `features` is K x d (may be empty
  /// for the mean estimator).
  virtual MeanEstimates estimate(const ObservationBatch& batch, int round, const ArmList& active,
                                 const Eigen::MatrixXd& features) = 0;
  virtual bool needs_features() const = 0;
};

/// Stateful per run (the MLP keeps its warm start between rounds).
std::unique_ptr<Estimator> make_estimator(EstimatorKind kind, const MlpConfig& mlp, RngStream rng);

}  // namespace mopx
