#include "mopx/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mopx/errors.hpp"

namespace mopx {

AlgorithmKind parse_algorithm(std::string_view name) {
  if (name == "gensec") return AlgorithmKind::GenSec;
  if (name == "genpsi") return AlgorithmKind::GenPsi;
  if (name == "uniform") return AlgorithmKind::Uniform;
  throw ConfigError("unknown algorithm '" + std::string(name) + "' (expected gensec, genpsi or uniform)");
}

ObjectiveMode parse_mode(std::string_view name) {
  if (name == "constrained") return ObjectiveMode::Constrained;
  if (name == "pareto") return ObjectiveMode::Pareto;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected constrained or pareto)");
}

EliminatorKind parse_eliminator(std::string_view name) {
  if (name == "ege") return EliminatorKind::Ege;
  if (name == "truncate") return EliminatorKind::Truncate;
  throw ConfigError("unknown eliminator '" + std::string(name) + "' (expected ege or truncate)");
}

std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::GenSec: return "gensec";
    case AlgorithmKind::GenPsi: return "genpsi";
    case AlgorithmKind::Uniform: return "uniform";
  }
  return "?";
}

std::string to_string(ObjectiveMode mode) { return mode == ObjectiveMode::Constrained ? "constrained" : "pareto"; }

long RunConfig::budget_from_per_arm(long per_arm, std::size_t num_arms) {
  if (per_arm < 1) throw ConfigError("per-arm budget b must be >= 1");
  return per_arm * static_cast<long>(num_arms);
}

ArmList rank_constrained(const MeanEstimates& estimates, double tau) {
  if (estimates.values.cols() != 2) throw DomainError("rank_constrained needs m = 2 objectives");
  std::vector<std::size_t> feasible, infeasible;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    (estimates.values(static_cast<Eigen::Index>(i), 1) > tau ? feasible : infeasible).push_back(i);
  }
  auto by_column = [&](Eigen::Index col) {
    return [&estimates, col](std::size_t a, std::size_t b) {
      const double va = estimates.values(static_cast<Eigen::Index>(a), col);
      const double vb = estimates.values(static_cast<Eigen::Index>(b), col);
      if (va != vb) return va > vb;
      return estimates.arms[a] < estimates.arms[b];
    };
  };
  std::sort(feasible.begin(), feasible.end(), by_column(0));
  std::sort(infeasible.begin(), infeasible.end(), by_column(1));
  ArmList ranked;
  ranked.reserve(estimates.size());
  for (auto i : feasible) ranked.push_back(estimates.arms[i]);
  for (auto i : infeasible) ranked.push_back(estimates.arms[i]);
  return ranked;
}

EliminationStep eliminate_pareto(const ArmList& active, std::size_t keep, const std::vector<ParetoGapEntry>& gaps,
                                 const ArmList& front) {
  std::map<ArmId, double> gap_of;
  for (const auto& g : gaps) gap_of[g.arm] = g.gap;
  ArmList order = active;
  for (ArmId a : order) {
    if (!gap_of.count(a)) throw DomainError("eliminate_pareto: no gap for active arm " + std::to_string(a));
  }
  std::sort(order.begin(), order.end(), [&](ArmId a, ArmId b) {
    if (gap_of[a] != gap_of[b]) return gap_of[a] > gap_of[b];
    return a < b;
  });

  EliminationStep step;
  const std::size_t removals = active.size() > keep ? active.size() - keep : 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const ArmId a = order[i];
    if (i >= removals) {
      step.next_active.push_back(a);
    } else if (std::find(front.begin(), front.end(), a) != front.end()) {
      step.accepted.push_back(a);
    } else {
      step.rejected.push_back(a);
    }
  }
  std::sort(step.next_active.begin(), step.next_active.end());
  return step;
}

namespace {

constexpr std::uint64_t kEstimatorStream = std::numeric_limits<std::uint64_t>::max();

// State shared by the elimination loops of one run.
class RoundDriver {
 public:
  RoundDriver(const RunConfig& config, const Environment& env)
      : config_(config), env_(env), rng_(config.seed, {config.stream_id}) {
    const auto k = env.num_arms();
    if (k < 2) throw ConfigError("need K >= 2 arms");
    if (env.features()) {
      features_ = *env.features();
    } else {
      features_ = Eigen::MatrixXd(static_cast<Eigen::Index>(k), 0);
    }
    const bool needs_features =
        config.estimator != EstimatorKind::Mean || config.allocator.kind == AllocatorKind::GOptimal;
    if (needs_features && features_.cols() == 0) {
      throw ConfigError("estimator '" + to_string(config.estimator) + "' with allocator '" +
                        to_string(config.allocator.kind) + "' needs a feature map");
    }

    ScheduleOptions opts;
    opts.redistribute_leftover = config.redistribute_leftover;
    if (config.estimator == EstimatorKind::Linear && config.enforce_linear_bounds) {
      opts.linear_dim = static_cast<std::size_t>(features_.cols());
    }
    schedule_ = make_schedule(config.scheduler, k, config.budget, opts);
    if (config.estimator == EstimatorKind::Mean && config.allocator.kind == AllocatorKind::Uniform &&
        schedule_.pulls_per_round.front() < static_cast<long>(k)) {
      throw ConfigError("first-round budget n_1=" + std::to_string(schedule_.pulls_per_round.front()) +
                        " is below K=" + std::to_string(k) + "; the sample-mean estimator needs every arm pulled");
    }
    allocator_ = config.allocator;
    allocator_.enforce_min_pulls = config.enforce_linear_bounds;
    estimator_ = make_estimator(config.estimator, config.mlp, rng_.child({0, kEstimatorStream}));
  }

  const Schedule& schedule() const { return schedule_; }

  /// Allocate, pull and estimate for round r (1-based) over `active`.
  RoundLog play_round(int r, const ArmList& active) {
    RoundLog log;
    log.round = r;
    log.active_before = active;
    log.planned_pulls = schedule_.pulls_per_round[static_cast<std::size_t>(r - 1)];
    if (log.planned_pulls > 0) {
      Allocation alloc = allocate(allocator_, log.planned_pulls, active, features_);
      log.counts = alloc.counts;
      log.design_objective = alloc.design_objective;
      log.warnings = alloc.warnings;
      const RngStream round_rng = rng_.child(static_cast<std::uint64_t>(r));
      for (std::size_t t = 0; t < alloc.sequence.size(); ++t) {
        const ArmId arm = alloc.sequence[t];
        RngStream pull_rng = round_rng.child(static_cast<std::uint64_t>(t));
        batch_.append(Observation{arm, feature_of(env_, arm), env_.pull(arm, pull_rng), r});
        ++pulls_used_;
      }
    }
    if (pulls_used_ > config_.budget) throw Error("internal: budget overrun");
    log.estimates = estimator_->estimate(batch_, r, active, features_);
    return log;
  }

  long pulls_used() const { return pulls_used_; }

 private:
  const RunConfig& config_;
  const Environment& env_;
  RngStream rng_;
  Eigen::MatrixXd features_;
  Schedule schedule_;
  AllocatorConfig allocator_;
  std::unique_ptr<Estimator> estimator_;
  ObservationBatch batch_;
  long pulls_used_ = 0;
};

[[noreturn]] void rethrow_with_round(int round, const Error& e) {
  const std::string msg = "round " + std::to_string(round) + ": " + e.what();
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
  if (dynamic_cast<const EstimationError*>(&e)) throw EstimationError(msg);
  if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(msg);
  if (dynamic_cast<const DomainError*>(&e)) throw DomainError(msg);
  throw Error(msg);
}

}  // namespace

RunResult run_gensec(const RunConfig& config, const Environment& env) {
  if (env.num_objectives() != 2) throw ConfigError("gensec supports m = 2 objectives");
  RoundDriver driver(config, env);
  RunResult result;
  result.algorithm = AlgorithmKind::GenSec;
  result.budget = config.budget;
  ArmList active = all_arms(env.num_arms());
  const auto& sched = driver.schedule();
  for (int r = 1; r <= sched.rounds; ++r) {
    try {
      RoundLog log = driver.play_round(r, active);
      const ArmList ranked = rank_constrained(log.estimates, config.tau);
      const std::size_t keep = sched.keep_counts[static_cast<std::size_t>(r - 1)];
      active.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(keep, ranked.size())));
      log.eliminated.assign(ranked.begin() + static_cast<std::ptrdiff_t>(active.size()), ranked.end());
      log.active_after = active;
      result.rounds.push_back(std::move(log));
    } catch (const Error& e) {
      rethrow_with_round(r, e);
    }
  }
  result.selected = active;
  result.pulls_used = driver.pulls_used();
  return result;
}

RunResult run_genpsi(const RunConfig& config, const Environment& env) {
  const auto k = env.num_arms();
  RoundDriver driver(config, env);
  RunResult result;
  result.algorithm = AlgorithmKind::GenPsi;
  result.budget = config.budget;

  // Eliminated arms keep their last estimate so dominance is checked against every arm.
  Eigen::MatrixXd latest = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(env.num_objectives()));
  std::vector<bool> known(k, false);
  ArmList active = all_arms(k);
  ArmList accepted;
  ArmList final_front;
  const auto& sched = driver.schedule();

  for (int r = 1; r <= sched.rounds; ++r) {
    try {
      RoundLog log = driver.play_round(r, active);
      for (std::size_t i = 0; i < log.estimates.size(); ++i) {
        latest.row(static_cast<Eigen::Index>(log.estimates.arms[i])) = log.estimates.values.row(static_cast<Eigen::Index>(i));
        known[log.estimates.arms[i]] = true;
      }
      ArmList known_arms;
      for (ArmId a = 0; a < k; ++a) {
        if (known[a]) known_arms.push_back(a);
      }
      const Eigen::MatrixXd sub = select_rows(latest, known_arms);
      std::vector<ParetoGapEntry> gaps;
      ArmList front;
      if (known_arms.size() >= 2) {
        for (auto g : pareto_gaps(sub)) {
          g.arm = known_arms[g.arm];
          if (g.on_front) front.push_back(g.arm);
          if (std::find(active.begin(), active.end(), g.arm) != active.end()) gaps.push_back(g);
        }
      } else {
        front = known_arms;
        for (ArmId a : known_arms) gaps.push_back(ParetoGapEntry{a, true, kUnboundedGap});
      }

      const std::size_t keep = sched.keep_counts[static_cast<std::size_t>(r - 1)];
      EliminationStep step = eliminate_pareto(active, keep, gaps, front);
      if (config.eliminator == EliminatorKind::Truncate) {
        step.rejected.insert(step.rejected.end(), step.accepted.begin(), step.accepted.end());
        step.accepted.clear();
      }
      accepted.insert(accepted.end(), step.accepted.begin(), step.accepted.end());
      log.accepted = step.accepted;
      log.eliminated = step.accepted;
      log.eliminated.insert(log.eliminated.end(), step.rejected.begin(), step.rejected.end());
      active = step.next_active;
      log.active_after = active;
      final_front.clear();
      for (ArmId a : active) {
        if (std::find(front.begin(), front.end(), a) != front.end()) final_front.push_back(a);
      }
      result.rounds.push_back(std::move(log));
    } catch (const Error& e) {
      rethrow_with_round(r, e);
    }
  }
  result.selected = accepted;
  result.selected.insert(result.selected.end(), final_front.begin(), final_front.end());
  std::sort(result.selected.begin(), result.selected.end());
  result.selected.erase(std::unique(result.selected.begin(), result.selected.end()), result.selected.end());
  result.pulls_used = driver.pulls_used();
  return result;
}

RunResult run_uniform_baseline(const RunConfig& config, const Environment& env, ObjectiveMode mode) {
  const auto k = env.num_arms();
  if (config.budget < static_cast<long>(k)) {
    throw ConfigError("uniform baseline needs B >= K (B=" + std::to_string(config.budget) + ", K=" + std::to_string(k) + ")");
  }
  if (mode == ObjectiveMode::Constrained && env.num_objectives() != 2) {
    throw ConfigError("constrained mode supports m = 2 objectives");
  }
  const RngStream rng(config.seed, {config.stream_id});
  const ArmList arms = all_arms(k);
  RoundLog log;
  log.round = 1;
  log.active_before = arms;
  log.planned_pulls = config.budget;
  log.counts = allocate_uniform(config.budget, arms);
  ObservationBatch batch;
  const RngStream round_rng = rng.child(std::uint64_t{1});
  const auto sequence = round_robin_sequence(log.counts);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    RngStream pull_rng = round_rng.child(static_cast<std::uint64_t>(t));
    batch.append(Observation{sequence[t], feature_of(env, sequence[t]), env.pull(sequence[t], pull_rng), 1});
  }
  log.estimates = estimate_sample_mean(batch, arms);

  RunResult result;
  result.algorithm = AlgorithmKind::Uniform;
  result.budget = config.budget;
  result.pulls_used = static_cast<long>(sequence.size());
  if (mode == ObjectiveMode::Constrained) {
    result.selected = {rank_constrained(log.estimates, config.tau).front()};
  } else {
    result.selected = pareto_front(log.estimates.values);
  }
  log.active_after = result.selected;
  result.rounds.push_back(std::move(log));
  return result;
}

RunResult run_algorithm(const RunConfig& config, const Environment& env) {
  switch (config.algorithm) {
    case AlgorithmKind::GenSec: return run_gensec(config, env);
    case AlgorithmKind::GenPsi: return run_genpsi(config, env);
    case AlgorithmKind::Uniform: return run_uniform_baseline(config, env, config.mode);
  }
  throw ConfigError("unknown algorithm");
}

double theorem_bound(std::size_t num_arms, std::size_t dim, double sigma, long budget, double hardness) {
  if (num_arms < 2 || dim < 1) throw ConfigError("theorem_bound needs K >= 2 and d >= 1");
  if (!(sigma > 0.0)) throw ConfigError("theorem_bound needs sigma > 0");
  if (!(hardness > 0.0)) throw ConfigError("theorem_bound needs H > 0");
  const long rounds = ceil_log2(num_arms);
  const long bound = 45L * static_cast<long>(dim) * rounds;
  if (budget < bound) {
    throw ConfigError("theorem_bound needs B >= 45*d*ceil(log2 K)=" + std::to_string(bound) + ", got B=" +
                      std::to_string(budget));
  }
  const double a = 1.0 / (6.0 * sigma * sigma);
  const double per_round = static_cast<double>(budget / rounds);
  return 48.0 * static_cast<double>(rounds) *
         std::exp(-(a / 4.0) * per_round / (static_cast<double>(dim) * hardness));
}

}  // namespace mopx
