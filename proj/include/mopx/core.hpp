#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

#include "mopx/rng.hpp"

namespace mopx {

/// Dense arm index in [0, K). Ascending index is the global tie-break order.
using ArmId = std::size_t;
using ArmList = std::vector<ArmId>;

/// One score per objective, larger is better.
using RewardVector = Eigen::VectorXd;

/// Ground truth of a bandit problem.
struct Instance {
  Eigen::MatrixXd means;                  // K x m
  std::optional<Eigen::MatrixXd> features;  // K x d
  std::optional<Eigen::MatrixXd> theta;     // d x m
  double sigma = 0.0;

  std::size_t num_arms() const { return static_cast<std::size_t>(means.rows()); }
  std::size_t num_objectives() const { return static_cast<std::size_t>(means.cols()); }
  std::size_t dim() const { return features ? static_cast<std::size_t>(features->cols()) : 0; }

  /// Throws ConfigError when shapes or the linear identity means = features * theta are violated.
  void validate() const;
};

/// Builds a linear instance; means are computed as features * theta.
Instance make_linear_instance(Eigen::MatrixXd features, Eigen::MatrixXd theta, double sigma);

struct Observation {
  ArmId arm;
  Eigen::VectorXd feature;  // empty when the environment has no feature map
  RewardVector reward;
  int round;
};

/// Append-only record of (arm, feature, reward, round) rows collected during a run.
class ObservationBatch {
 public:
  void append(Observation obs) { rows_.push_back(std::move(obs)); }
  const std::vector<Observation>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  /// Rows collected in the given round only.
  ObservationBatch round_subset(int round) const;

 private:
  std::vector<Observation> rows_;
};

/// Estimated mean vectors for a set of arms; row i of values belongs to arms[i].
struct MeanEstimates {
  ArmList arms;
  Eigen::MatrixXd values;

  std::size_t size() const { return arms.size(); }
  /// Row for the given arm; throws DomainError when the arm is not covered.
  RewardVector of(ArmId arm) const;
  std::optional<std::size_t> row_of(ArmId arm) const;
};

/// Reward source. Implementations hold no per-pull state except the sequential replay mode;
/// all randomness comes from the caller's stream.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t num_arms() const = 0;
  virtual std::size_t num_objectives() const = 0;
  /// Feature map phi as a K x d matrix, when the environment carries one.
  virtual const std::optional<Eigen::MatrixXd>& features() const = 0;
  /// Expected reward of every arm (K x m).
  virtual const Eigen::MatrixXd& true_means() const = 0;

  /// One stochastic reward for arm; throws DomainError when arm >= K.
  RewardVector pull(ArmId arm, RngStream& rng) const;

 protected:
  virtual RewardVector do_pull(ArmId arm, RngStream& rng) const = 0;
};

inline RewardVector env_pull(const Environment& env, ArmId arm, RngStream& rng) {
  return env.pull(arm, rng);
}

/// Feature row for arm, or an empty vector when env has no feature map.
Eigen::VectorXd feature_of(const Environment& env, ArmId arm);

ArmList all_arms(std::size_t k);

}  // namespace mopx
