#include "mopx/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mopx/errors.hpp"

namespace mopx {

std::vector<std::size_t> select_basis(const Eigen::MatrixXd& rows, double tol) {
  std::vector<std::size_t> chosen;
  const Eigen::Index d = rows.cols();
  Eigen::MatrixXd q(d, 0);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (static_cast<Eigen::Index>(chosen.size()) == d) break;
    const Eigen::VectorXd v = rows.row(i).transpose();
    Eigen::VectorXd res = v;
    // Two passes of classical Gram-Schmidt keep the residual accurate.
    for (int pass = 0; pass < 2 && q.cols() > 0; ++pass) res -= q * (q.transpose() * res);
    const double norm = res.norm();
    if (norm > tol * std::max(1.0, v.norm())) {
      q.conservativeResize(Eigen::NoChange, q.cols() + 1);
      q.col(q.cols() - 1) = res / norm;
      chosen.push_back(static_cast<std::size_t>(i));
    }
  }
  return chosen;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& active_features) {
  if (active_features.rows() == 0) throw DomainError("pseudo_inverse needs at least one active feature");
  if (gram.rows() != gram.cols() || gram.rows() != active_features.cols()) {
    throw DomainError("pseudo_inverse: gram must be d x d with d matching the features");
  }
  const auto basis = select_basis(active_features);
  const Eigen::Index d = gram.rows();
  if (basis.empty()) return Eigen::MatrixXd::Zero(d, d);

  Eigen::MatrixXd phi(d, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    phi.col(static_cast<Eigen::Index>(j)) = active_features.row(static_cast<Eigen::Index>(basis[j])).transpose();
  }
  Eigen::MatrixXd inner = phi.transpose() * gram * phi;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw NumericalError("pseudo_inverse: Phi^T V Phi is numerically singular (eigenvalues " + std::to_string(lo) +
                         " .. " + std::to_string(hi) + ")");
  }
  const Eigen::MatrixXd solved = inner.ldlt().solve(phi.transpose());
  Eigen::MatrixXd out = phi * solved;
  return 0.5 * (out + out.transpose());
}

MeanEstimates estimate_sample_mean(const ObservationBatch& batch, const ArmList& active) {
  if (active.empty()) return {};
  std::map<ArmId, std::size_t> slot;
  for (std::size_t i = 0; i < active.size(); ++i) slot[active[i]] = i;

  Eigen::Index m = 0;
  for (const auto& row : batch.rows()) {
    if (slot.count(row.arm)) {
      m = row.reward.size();
      break;
    }
  }
  if (m == 0) throw EstimationError("no observations for arm " + std::to_string(active.front()));

  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(active.size()), m);
  std::vector<long> counts(active.size(), 0);
  for (const auto& row : batch.rows()) {
    auto it = slot.find(row.arm);
    if (it == slot.end()) continue;
    sums.row(static_cast<Eigen::Index>(it->second)) += row.reward.transpose();
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (counts[i] == 0) throw EstimationError("no observations for arm " + std::to_string(active[i]));
    sums.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(counts[i]);
  }
  return MeanEstimates{active, std::move(sums)};
}

namespace {

void batch_matrices(const ObservationBatch& batch, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto& first = batch.rows().front();
  if (first.feature.size() == 0) throw ConfigError("observations carry no features; this estimator needs a feature map");
  x.resize(n, first.feature.size());
  y.resize(n, first.reward.size());
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& row = batch.rows()[static_cast<std::size_t>(t)];
    x.row(t) = row.feature.transpose();
    y.row(t) = row.reward.transpose();
  }
}

}  // namespace

LinearFit fit_linear(const ObservationBatch& round_batch) {
  if (round_batch.empty()) throw EstimationError("fit_linear: empty batch");
  Eigen::MatrixXd x, y;
  batch_matrices(round_batch, x, y);

  std::map<ArmId, Eigen::VectorXd> pulled;
  for (const auto& row : round_batch.rows()) pulled.emplace(row.arm, row.feature);
  Eigen::MatrixXd candidates(static_cast<Eigen::Index>(pulled.size()), x.cols());
  std::vector<ArmId> candidate_arms;
  for (const auto& [arm, feature] : pulled) {
    candidates.row(static_cast<Eigen::Index>(candidate_arms.size())) = feature.transpose();
    candidate_arms.push_back(arm);
  }

  LinearFit fit;
  fit.gram = x.transpose() * x;
  fit.gram_pinv = pseudo_inverse(fit.gram, candidates);
  const auto basis = select_basis(candidates);
  for (std::size_t idx : basis) fit.basis_arms.push_back(candidate_arms[idx]);
  // theta_hat = Phi (Phi^T V Phi)^{-1} Phi^T X^T Y, evaluated as a QR least-squares solve in the
  // basis coordinates so the conditioning of X Phi is not squared.
  Eigen::MatrixXd phi(x.cols(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    phi.col(static_cast<Eigen::Index>(j)) = candidates.row(static_cast<Eigen::Index>(basis[j])).transpose();
  }
  fit.theta_hat = phi * (x * phi).colPivHouseholderQr().solve(y);
  return fit;
}

MeanEstimates predict_linear(const LinearFit& fit, const ArmList& arms, const Eigen::MatrixXd& features) {
  MeanEstimates out{arms, Eigen::MatrixXd(static_cast<Eigen::Index>(arms.size()), fit.theta_hat.cols())};
  for (std::size_t i = 0; i < arms.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(arms[i])) * fit.theta_hat;
  }
  return out;
}

// --- MLP -------------------------------------------------------------------

MlpParams MlpParams::zeros(std::size_t d, std::size_t hidden, std::size_t m) {
  const auto h = static_cast<Eigen::Index>(hidden);
  return MlpParams{Eigen::MatrixXd::Zero(h, static_cast<Eigen::Index>(d)), Eigen::VectorXd::Zero(h),
                   Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), h),
                   Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m))};
}

double MlpParams::squared_norm() const {
  return w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2.squaredNorm();
}

bool MlpParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd hidden = ((x * p.w1.transpose()).rowwise() + p.b1.transpose()).cwiseMax(0.0);
  return (hidden * p.w2.transpose()).rowwise() + p.b2.transpose();
}

MlpLossGrad mlp_loss_grad(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda) {
  if (x.rows() == 0) throw EstimationError("mlp_loss_grad: empty batch");
  if (lambda < 0.0) throw ConfigError("mlp lambda must be >= 0");
  const double n = static_cast<double>(x.rows());

  const Eigen::MatrixXd pre = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
  const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
  const Eigen::MatrixXd out = (hidden * p.w2.transpose()).rowwise() + p.b2.transpose();
  const Eigen::MatrixXd resid = out - y;

  MlpLossGrad r{resid.squaredNorm() / n + lambda * p.squared_norm(), MlpParams{}};

  const Eigen::MatrixXd d_out = (2.0 / n) * resid;
  r.grad.w2 = d_out.transpose() * hidden + 2.0 * lambda * p.w2;
  r.grad.b2 = d_out.colwise().sum().transpose() + 2.0 * lambda * p.b2;
  const Eigen::MatrixXd d_pre = (d_out * p.w2).array() * (pre.array() > 0.0).cast<double>();
  r.grad.w1 = d_pre.transpose() * x + 2.0 * lambda * p.w1;
  r.grad.b1 = d_pre.colwise().sum().transpose() + 2.0 * lambda * p.b1;
  return r;
}

MlpLossGrad mlp_loss_grad(const MlpParams& params, const ObservationBatch& batch, double lambda) {
  if (batch.empty()) throw EstimationError("mlp_loss_grad: empty batch");
  Eigen::MatrixXd x, y;
  batch_matrices(batch, x, y);
  return mlp_loss_grad(params, x, y, lambda);
}

MlpParams mlp_init(std::size_t d, std::size_t hidden, std::size_t m, RngStream& rng) {
  MlpParams p = MlpParams::zeros(d, hidden, m);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = rng.uniform(-s1, s1);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1[i] = rng.uniform(-s1, s1);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = rng.uniform(-s2, s2);
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2[i] = rng.uniform(-s2, s2);
  return p;
}

namespace {

Eigen::VectorXd flatten(const MlpParams& p) {
  Eigen::VectorXd v(p.w1.size() + p.b1.size() + p.w2.size() + p.b2.size());
  Eigen::Index o = 0;
  for (const auto* block : {&p.w1, &p.w2}) {
    v.segment(o, block->size()) = Eigen::Map<const Eigen::VectorXd>(block->data(), block->size());
    o += block->size();
  }
  for (const auto* block : {&p.b1, &p.b2}) {
    v.segment(o, block->size()) = *block;
    o += block->size();
  }
  return v;
}

void unflatten(const Eigen::VectorXd& v, MlpParams& p) {
  Eigen::Index o = 0;
  for (auto* block : {&p.w1, &p.w2}) {
    Eigen::Map<Eigen::VectorXd>(block->data(), block->size()) = v.segment(o, block->size());
    o += block->size();
  }
  for (auto* block : {&p.b1, &p.b2}) {
    *block = v.segment(o, block->size());
    o += block->size();
  }
}

}  // namespace

MlpFitResult mlp_fit(const ObservationBatch& batch, const MlpConfig& config, RngStream& rng,
                     const std::optional<MlpParams>& warm_start) {
  if (batch.empty()) throw EstimationError("mlp_fit: empty batch");
  if (config.hidden == 0) throw ConfigError("mlp hidden width must be >= 1");
  if (config.iters < 0) throw ConfigError("mlp iters must be >= 0");
  Eigen::MatrixXd x, y;
  batch_matrices(batch, x, y);

  MlpFitResult out;
  out.params = warm_start ? *warm_start
                          : mlp_init(static_cast<std::size_t>(x.cols()), config.hidden,
                                     static_cast<std::size_t>(y.cols()), rng);
  if (out.params.w1.cols() != x.cols() || out.params.w2.rows() != y.cols()) {
    throw ConfigError("mlp warm start has incompatible shape");
  }

  Eigen::VectorXd theta = flatten(out.params);
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  double b1_pow = 1.0, b2_pow = 1.0;
  double lr = config.learning_rate;
  // Last checkpoint; a checkpoint with a higher loss rolls back to it and halves the step.
  Eigen::VectorXd saved = theta;
  double saved_loss = std::numeric_limits<double>::infinity();

  for (int it = 0; it <= config.iters; ++it) {
    unflatten(theta, out.params);
    auto lg = mlp_loss_grad(out.params, x, y, config.lambda);
    if (!std::isfinite(lg.loss)) {
      throw NumericalError("mlp_fit: non-finite loss at iteration " + std::to_string(it));
    }
    if (it == config.iters || (config.checkpoint_every > 0 && it % config.checkpoint_every == 0)) {
      if (lg.loss > saved_loss) {
        theta = saved;
        unflatten(theta, out.params);
        lg = mlp_loss_grad(out.params, x, y, config.lambda);
        lr *= 0.5;
        m1.setZero();
        m2.setZero();
        b1_pow = b2_pow = 1.0;
      }
      saved = theta;
      saved_loss = lg.loss;
      out.checkpoint_losses.push_back(lg.loss);
    }
    if (it == config.iters) break;

    const Eigen::VectorXd g = flatten(lg.grad);
    b1_pow *= config.beta1;
    b2_pow *= config.beta2;
    m1 = config.beta1 * m1 + (1.0 - config.beta1) * g;
    m2 = config.beta2 * m2 + (1.0 - config.beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXd m_hat = m1.array() / (1.0 - b1_pow);
    const Eigen::ArrayXd v_hat = m2.array() / (1.0 - b2_pow);
    theta.array() -= lr * m_hat / (v_hat.sqrt() + config.adam_eps);
  }
  return out;
}

MeanEstimates mlp_predict(const MlpParams& params, const ArmList& arms, const Eigen::MatrixXd& features) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(arms.size()), features.cols());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(arms[i]));
  }
  return MeanEstimates{arms, mlp_forward(params, x)};
}

// --- pluggable estimators ----------------------------------------------------

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "mean") return EstimatorKind::Mean;
  if (name == "linear") return EstimatorKind::Linear;
  if (name == "mlp") return EstimatorKind::Mlp;
  throw ConfigError("unknown estimator '" + std::string(name) + "' (expected mean, linear or mlp)");
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Mean: return "mean";
    case EstimatorKind::Linear: return "linear";
    case EstimatorKind::Mlp: return "mlp";
  }
  return "?";
}

namespace {

class SampleMeanEstimator final : public Estimator {
 public:
  MeanEstimates estimate(const ObservationBatch& batch, int, const ArmList& active, const Eigen::MatrixXd&) override {
    return estimate_sample_mean(batch, active);
  }
  bool needs_features() const override { return false; }
};

class LinearEstimator final : public Estimator {
 public:
  MeanEstimates estimate(const ObservationBatch& batch, int round, const ArmList& active,
                         const Eigen::MatrixXd& features) override {
    // A round that planned zero pulls (possible under SR with a small budget) keeps the last fit.
    const ObservationBatch rows = batch.round_subset(round);
    if (!rows.empty() || !last_) last_ = fit_linear(rows);
    return predict_linear(*last_, active, features);
  }
  bool needs_features() const override { return true; }

 private:
  std::optional<LinearFit> last_;
};

class MlpEstimator final : public Estimator {
 public:
  MlpEstimator(MlpConfig config, RngStream rng) : config_(config), rng_(std::move(rng)) {}

  MeanEstimates estimate(const ObservationBatch& batch, int round, const ArmList& active,
                         const Eigen::MatrixXd& features) override {
    const ObservationBatch data = config_.scope == MlpDataScope::Cumulative ? batch : batch.round_subset(round);
    if (data.empty() && params_) return mlp_predict(*params_, active, features);
    auto fit = mlp_fit(data, config_, rng_, params_);
    params_ = fit.params;
    return mlp_predict(*params_, active, features);
  }
  bool needs_features() const override { return true; }

 private:
  MlpConfig config_;
  RngStream rng_;
  std::optional<MlpParams> params_;
};

}  // namespace

std::unique_ptr<Estimator> make_estimator(EstimatorKind kind, const MlpConfig& mlp, RngStream rng) {
  switch (kind) {
    case EstimatorKind::Mean: return std::make_unique<SampleMeanEstimator>();
    case EstimatorKind::Linear: return std::make_unique<LinearEstimator>();
    case EstimatorKind::Mlp: return std::make_unique<MlpEstimator>(mlp, std::move(rng));
  }
  throw ConfigError("unknown estimator kind");
}

}  // namespace mopx
