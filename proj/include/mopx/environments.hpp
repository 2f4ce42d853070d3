#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mopx/core.hpp"

namespace mopx {

/// Recorded pulls per arm, the offline stand-in for live evaluation.
struct ReplayTable {
  std::vector<std::vector<RewardVector>> records;  // records[arm] = list of recorded reward vectors
  std::vector<std::vector<double>> token_lengths;  // parallel to records when a len_tokens column exists

  std::size_t num_arms() const { return records.size(); }
  std::size_t num_objectives() const;
  bool has_lengths() const { return !token_lengths.empty(); }
  /// Per-arm average of the records (K x m).
  Eigen::MatrixXd record_means() const;
  /// Throws ConfigError naming the first arm without records, or on inconsistent m.
  void validate() const;
};

struct BrevityThresholds {
  double tau_low;
  double tau_high;
};

/// 1 at or below tau_low, linear in between, 0 at or above tau_high.
double brevity_score(double length, double tau_low, double tau_high);

/// Replace objective 2 of every record with brevity_score of its token length.
ReplayTable with_brevity_objective(ReplayTable table, const BrevityThresholds& thresholds);

/// Replay CSV: header `arm_id[,len_tokens],obj_1,...,obj_m`, one row per recorded pull.
ReplayTable load_replay_csv(const std::filesystem::path& path);
ReplayTable parse_replay_csv(std::string_view text);

/// Instance JSON: {K, m, sigma, means, features?, theta?}.
Instance load_instance_json(const std::filesystem::path& path);
Instance parse_instance_json(std::string_view text);

/// Rows `arm_id,v_1,...,v_p`; returns a K x p matrix ordered by arm_id (ids must be 0..K-1).
Eigen::MatrixXd load_arm_matrix_csv(const std::filesystem::path& path);
Eigen::MatrixXd parse_arm_matrix_csv(std::string_view text);

enum class EnvironmentKind { Gaussian, Linear, Replay };
enum class ReplayMode { WithReplacement, Sequential };

EnvironmentKind parse_environment_kind(std::string_view name);
ReplayMode parse_replay_mode(std::string_view name);

/// f = mu(arm) + N(0, sigma^2) per objective.
class GaussianEnvironment final : public Environment {
 public:
  explicit GaussianEnvironment(Instance instance);
  std::size_t num_arms() const override { return instance_.num_arms(); }
  std::size_t num_objectives() const override { return instance_.num_objectives(); }
  const std::optional<Eigen::MatrixXd>& features() const override { return instance_.features; }
  const Eigen::MatrixXd& true_means() const override { return instance_.means; }
  const Instance& instance() const { return instance_; }

 protected:
  RewardVector do_pull(ArmId arm, RngStream& rng) const override;

 private:
  Instance instance_;
};

/// f = phi(arm)^T theta + N(0, sigma^2) per objective. Requires features and theta.
class LinearEnvironment final : public Environment {
 public:
  explicit LinearEnvironment(Instance instance);
  std::size_t num_arms() const override { return instance_.num_arms(); }
  std::size_t num_objectives() const override { return instance_.num_objectives(); }
  const std::optional<Eigen::MatrixXd>& features() const override { return instance_.features; }
  const Eigen::MatrixXd& true_means() const override { return instance_.means; }

 protected:
  RewardVector do_pull(ArmId arm, RngStream& rng) const override;

 private:
  Instance instance_;
};

/// Draws one recorded row of the arm uniformly with replacement, or walks the records in order
/// (wrapping around) in sequential mode. Sequential mode keeps a cursor per arm and must not be
/// shared between runs.
class ReplayEnvironment final : public Environment {
 public:
  ReplayEnvironment(ReplayTable table, ReplayMode mode = ReplayMode::WithReplacement,
                    std::optional<Eigen::MatrixXd> features = std::nullopt);
  std::size_t num_arms() const override { return table_.num_arms(); }
  std::size_t num_objectives() const override { return table_.num_objectives(); }
  const std::optional<Eigen::MatrixXd>& features() const override { return features_; }
  /// Mean of the recorded rows per arm.
  const Eigen::MatrixXd& true_means() const override { return means_; }

 protected:
  RewardVector do_pull(ArmId arm, RngStream& rng) const override;

 private:
  ReplayTable table_;
  ReplayMode mode_;
  std::optional<Eigen::MatrixXd> features_;
  Eigen::MatrixXd means_;
  mutable std::mutex cursor_mutex_;
  mutable std::vector<std::size_t> cursor_;
};

using EnvironmentSource = std::variant<Instance, ReplayTable>;

std::unique_ptr<Environment> make_environment(EnvironmentKind kind, EnvironmentSource source,
                                              ReplayMode mode = ReplayMode::WithReplacement,
                                              std::optional<Eigen::MatrixXd> replay_features = std::nullopt);

/// Restrict an instance to its first k arms.
Instance prefix_instance(const Instance& instance, std::size_t k);
ReplayTable prefix_replay(const ReplayTable& table, std::size_t k);

}  // namespace mopx
