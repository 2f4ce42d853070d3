#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mopx/allocators.hpp"
#include "mopx/core.hpp"
#include "mopx/estimators.hpp"
#include "mopx/gaps.hpp"
#include "mopx/schedulers.hpp"

namespace mopx {

enum class AlgorithmKind { GenSec, GenPsi, Uniform };
enum class ObjectiveMode { Constrained, Pareto };
enum class EliminatorKind { Ege, Truncate };

AlgorithmKind parse_algorithm(std::string_view name);
ObjectiveMode parse_mode(std::string_view name);
EliminatorKind parse_eliminator(std::string_view name);
std::string to_string(AlgorithmKind kind);
std::string to_string(ObjectiveMode mode);

struct RunConfig {
  AlgorithmKind algorithm = AlgorithmKind::GenSec;
  /// Only read by the uniform baseline; GenSec is always constrained and GenPSI always Pareto.
  ObjectiveMode mode = ObjectiveMode::Constrained;
  SchedulerKind scheduler = SchedulerKind::SequentialHalving;
  AllocatorConfig allocator;
  EstimatorKind estimator = EstimatorKind::Mean;
  MlpConfig mlp;
  EliminatorKind eliminator = EliminatorKind::Ege;
  long budget = 0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  /// Extra RNG path component so that distinct runs under one seed draw independent streams.
  std::uint64_t stream_id = 0;
  bool redistribute_leftover = false;
  /// Enforce B >= 45 d ceil(log2 K) and n_r >= 45 d_act for the linear pipeline.
  bool enforce_linear_bounds = true;

  /// B = b * K.
  static long budget_from_per_arm(long per_arm, std::size_t num_arms);
};

struct RoundLog {
  int round = 0;
  ArmList active_before;
  long planned_pulls = 0;
  PullCounts counts;
  MeanEstimates estimates;
  ArmList active_after;
  ArmList eliminated;
  ArmList accepted;
  std::optional<double> design_objective;
  std::vector<std::string> warnings;
};

struct RunResult {
  AlgorithmKind algorithm = AlgorithmKind::GenSec;
  ArmList selected;  // singleton for constrained runs
  std::vector<RoundLog> rounds;
  long pulls_used = 0;
  long budget = 0;
};

/// Feasible arms (mu_2 > tau) by decreasing mu_1, then the rest by decreasing mu_2; ties by index.
ArmList rank_constrained(const MeanEstimates& estimates, double tau);

struct EliminationStep {
  ArmList next_active;
  ArmList accepted;
  ArmList rejected;
};

/// Removes the |active| - keep arms with the largest gap (ties: lowest index first). A removed arm
/// is accepted when it is in `front`, rejected otherwise. `gaps` must cover every active arm.
EliminationStep eliminate_pareto(const ArmList& active, std::size_t keep, const std::vector<ParetoGapEntry>& gaps,
                                 const ArmList& front);

RunResult run_gensec(const RunConfig& config, const Environment& env);
RunResult run_genpsi(const RunConfig& config, const Environment& env);
RunResult run_uniform_baseline(const RunConfig& config, const Environment& env, ObjectiveMode mode);
/// Dispatch on config.algorithm.
RunResult run_algorithm(const RunConfig& config, const Environment& env);

/// 48 ceil(log2 K) exp(-(a/4) floor(B / ceil(log2 K)) / (d H)), a = 1 / (6 sigma^2).
double theorem_bound(std::size_t num_arms, std::size_t dim, double sigma, long budget, double hardness);

}  // namespace mopx
