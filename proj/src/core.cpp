#include "mopx/core.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mopx/errors.hpp"

namespace mopx {

void Instance::validate() const {
  if (means.rows() < 1) throw ConfigError("instance needs K >= 1 arms");
  if (means.cols() < 2) throw ConfigError("instance needs m >= 2 objectives");
  if (!means.allFinite()) throw ConfigError("instance means must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("instance sigma must be finite and >= 0");
  if (theta && !features) {
    throw ConfigError("instance theta given without features");
  }
  if (features) {
    if (features->rows() != means.rows()) throw ConfigError("features must have one row per arm");
    if (features->cols() < 1) throw ConfigError("features need d >= 1");
    if (!features->allFinite()) throw ConfigError("features must be finite");
  }
  if (features && theta) {
    if (theta->rows() != features->cols() || theta->cols() != means.cols()) {
      throw ConfigError("theta must be d x m");
    }
    const Eigen::MatrixXd implied = (*features) * (*theta);
    const double dev = (implied - means).cwiseAbs().maxCoeff();
    if (dev > 1e-9) {
      throw ConfigError("means differ from features * theta by " + std::to_string(dev));
    }
  }
}

Instance make_linear_instance(Eigen::MatrixXd features, Eigen::MatrixXd theta, double sigma) {
  Instance inst;
  inst.means = features * theta;
  inst.features = std::move(features);
  inst.theta = std::move(theta);
  inst.sigma = sigma;
  inst.validate();
  return inst;
}

ObservationBatch ObservationBatch::round_subset(int round) const {
  ObservationBatch out;
  for (const auto& row : rows_) {
    if (row.round == round) out.append(row);
  }
  return out;
}

std::optional<std::size_t> MeanEstimates::row_of(ArmId arm) const {
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i] == arm) return i;
  }
  return std::nullopt;
}

RewardVector MeanEstimates::of(ArmId arm) const {
  auto row = row_of(arm);
  if (!row) throw DomainError("no estimate for arm " + std::to_string(arm));
  return values.row(static_cast<Eigen::Index>(*row)).transpose();
}

RewardVector Environment::pull(ArmId arm, RngStream& rng) const {
  if (arm >= num_arms()) {
    throw DomainError("arm " + std::to_string(arm) + " out of range [0, " + std::to_string(num_arms()) + ")");
  }
  return do_pull(arm, rng);
}

Eigen::VectorXd feature_of(const Environment& env, ArmId arm) {
  const auto& f = env.features();
  if (!f) return {};
  return f->row(static_cast<Eigen::Index>(arm)).transpose();
}

ArmList all_arms(std::size_t k) {
  ArmList arms(k);
  std::iota(arms.begin(), arms.end(), ArmId{0});
  return arms;
}

}  // namespace mopx
