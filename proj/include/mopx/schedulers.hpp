#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mopx {

enum class SchedulerKind { SequentialHalving, SuccessiveRejects };

SchedulerKind parse_scheduler(std::string_view name);
std::string to_string(SchedulerKind kind);

/// Round plan: pulls_per_round[r] and keep_counts[r] for r = 0..rounds-1.
/// The initial active set size (K) is implicit.
struct Schedule {
  SchedulerKind kind = SchedulerKind::SequentialHalving;
  std::size_t num_arms = 0;
  long budget = 0;
  int rounds = 0;
  std::vector<long> pulls_per_round;
  std::vector<std::size_t> keep_counts;
  /// Successive Rejects only: cumulative per-arm pull target after each round.
  std::vector<long> per_arm_targets;

  long total_pulls() const;
};

struct ScheduleOptions {
  /// Give B - sum(n_r) to the final round instead of discarding it.
  bool redistribute_leftover = false;
  /// When set, enforce the linear-pipeline bound B >= 45 * d * ceil(log2 K).
  std::optional<std::size_t> linear_dim;
};

int ceil_log2(std::size_t k);

/// Throws ConfigError naming the violated bound when K < 2, B < K, or the linear bound fails.
Schedule make_schedule(SchedulerKind kind, std::size_t num_arms, long budget, const ScheduleOptions& options = {});

}  // namespace mopx
