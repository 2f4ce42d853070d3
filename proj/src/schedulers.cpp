#include "mopx/schedulers.hpp"

#include <cmath>
#include <numeric>

#include "mopx/errors.hpp"

namespace mopx {

SchedulerKind parse_scheduler(std::string_view name) {
  if (name == "sh" || name == "sequential_halving") return SchedulerKind::SequentialHalving;
  if (name == "sr" || name == "successive_rejects") return SchedulerKind::SuccessiveRejects;
  throw ConfigError("unknown scheduler '" + std::string(name) + "' (expected sh or sr)");
}

std::string to_string(SchedulerKind kind) {
  return kind == SchedulerKind::SequentialHalving ? "sequential_halving" : "successive_rejects";
}

long Schedule::total_pulls() const {
  return std::accumulate(pulls_per_round.begin(), pulls_per_round.end(), 0L);
}

int ceil_log2(std::size_t k) {
  int r = 0;
  std::size_t p = 1;
  while (p < k) {
    p <<= 1;
    ++r;
  }
  return r;
}

namespace {

Schedule sequential_halving(std::size_t k, long budget) {
  Schedule s;
  s.rounds = ceil_log2(k);
  const long per_round = budget / s.rounds;
  std::size_t keep = k;
  for (int r = 1; r <= s.rounds; ++r) {
    keep = (keep + 1) / 2;  // ceil(K / 2^r) via repeated ceil-halving
    s.keep_counts.push_back(keep);
    s.pulls_per_round.push_back(per_round);
  }
  return s;
}

Schedule successive_rejects(std::size_t k, long budget) {
  Schedule s;
  s.rounds = static_cast<int>(k) - 1;
  double log_bar = 0.5;
  for (std::size_t i = 2; i <= k; ++i) log_bar += 1.0 / static_cast<double>(i);
  const double spare = static_cast<double>(budget - static_cast<long>(k));
  long prev_target = 0;
  for (int r = 1; r <= s.rounds; ++r) {
    const double raw = spare / (log_bar * static_cast<double>(static_cast<long>(k) + 1 - r));
    // Guard against ceil() pushing an exact integer up by one ulp.
    long target = static_cast<long>(std::ceil(raw - 1e-9));
    // With B == K the formula yields zero; every arm still gets one pull in round 1.
    target = std::max(target, 1L);
    const auto active = static_cast<long>(k) - r + 1;
    s.per_arm_targets.push_back(target);
    s.pulls_per_round.push_back(active * (target - prev_target));
    s.keep_counts.push_back(k - static_cast<std::size_t>(r));
    prev_target = target;
  }
  return s;
}

}  // namespace

Schedule make_schedule(SchedulerKind kind, std::size_t num_arms, long budget, const ScheduleOptions& options) {
  if (num_arms < 2) {
    throw ConfigError("scheduler needs K >= 2 arms, got K=" + std::to_string(num_arms));
  }
  if (budget < static_cast<long>(num_arms)) {
    throw ConfigError("budget B=" + std::to_string(budget) + " is below the bound B >= K=" + std::to_string(num_arms));
  }
  if (options.linear_dim) {
    const long bound = 45L * static_cast<long>(*options.linear_dim) * ceil_log2(num_arms);
    if (budget < bound) {
      throw ConfigError("budget B=" + std::to_string(budget) + " is below the linear-pipeline bound B >= 45*d*ceil(log2 K)=" +
                        std::to_string(bound));
    }
  }

  Schedule s = kind == SchedulerKind::SequentialHalving ? sequential_halving(num_arms, budget)
                                                          : successive_rejects(num_arms, budget);
  s.kind = kind;
  s.num_arms = num_arms;
  s.budget = budget;
  if (options.redistribute_leftover) s.pulls_per_round.back() += budget - s.total_pulls();
  return s;
}

}  // namespace mopx
