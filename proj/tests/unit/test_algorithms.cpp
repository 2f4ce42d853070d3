#include "doctest.h"

#include <cmath>
#include <limits>
#include <set>

#include "mopx/algorithms.hpp"
#include "mopx/environments.hpp"
#include "mopx/errors.hpp"
#include "mopx/harness.hpp"
#include "oracles.hpp"

using namespace mopx;

namespace {

MeanEstimates estimates(const Eigen::MatrixXd& mu) {
  MeanEstimates e;
  for (Eigen::Index i = 0; i < mu.rows(); ++i) e.arms.push_back(static_cast<ArmId>(i));
  e.values = mu;
  return e;
}

Eigen::MatrixXd pqrs() {
  Eigen::MatrixXd mu(4, 2);  // P, Q, R, S
  mu << 0.9, 0.6, 0.95, 0.4, 0.7, 0.55, 0.2, 0.45;
  return mu;
}

Instance gaussian(const Eigen::MatrixXd& mu, double sigma) {
  Instance inst;
  inst.means = mu;
  inst.sigma = sigma;
  return inst;
}

RunConfig config(AlgorithmKind kind, SchedulerKind sched, long budget, double tau = 0.5) {
  RunConfig c;
  c.algorithm = kind;
  c.scheduler = sched;
  c.budget = budget;
  c.tau = tau;
  c.mode = kind == AlgorithmKind::GenPsi ? ObjectiveMode::Pareto : ObjectiveMode::Constrained;
  return c;
}

// Random instance with pairwise distinct coordinates.
Eigen::MatrixXd distinct_means(oracle::Lcg& g, int k, int m) {
  Eigen::MatrixXd mu(k, m);
  for (int j = 0; j < m; ++j) {
    std::set<double> used;
    for (int i = 0; i < k; ++i) {
      double v;
      do v = std::round(g.uniform(0.0, 1.0) * 1000) / 1000; while (!used.insert(v).second);
      mu(i, j) = v;
    }
  }
  return mu;
}

}  // namespace

TEST_CASE("constrained ranking") {
  const auto order = rank_constrained(estimates(pqrs()), 0.5);
  CHECK(order == ArmList{0, 2, 3, 1});  // P, R, S, Q
  Eigen::MatrixXd infeasible(3, 2);
  infeasible << 0.9, 0.1, 0.5, 0.3, 0.7, 0.2;
  CHECK(rank_constrained(estimates(infeasible), 0.5) == ArmList{1, 2, 0});
  Eigen::MatrixXd boundary(2, 2);
  boundary << 0.9, 0.5, 0.1, 0.51;
  CHECK(rank_constrained(estimates(boundary), 0.5) == ArmList{1, 0});
  Eigen::MatrixXd ties(3, 2);
  ties << 0.5, 0.6, 0.5, 0.6, 0.5, 0.6;
  CHECK(rank_constrained(estimates(ties), 0.5) == ArmList{0, 1, 2});
}

TEST_CASE("Pareto elimination accepts and rejects") {
  Eigen::MatrixXd mu(4, 2);
  mu << 1.0, 0.0, 0.0, 1.0, 0.6, 0.6, 0.4, 0.4;
  const auto gaps = pareto_gaps(mu);
  const ArmList front = pareto_front(mu);
  const ArmList active{0, 1, 2, 3};
  auto step = eliminate_pareto(active, 3, gaps, front);
  CHECK(step.accepted == ArmList{0});
  CHECK(step.next_active == ArmList{1, 2, 3});
  step = eliminate_pareto(active, 2, gaps, front);
  CHECK(step.accepted == ArmList{0, 1});
  CHECK(step.next_active == ArmList{2, 3});
  step = eliminate_pareto(active, 0, gaps, front);
  CHECK(step.rejected == ArmList{3});
}

TEST_CASE("zero-noise constrained runs return the best feasible arm") {
  GaussianEnvironment env(gaussian(pqrs(), 0.0));
  for (auto sched : {SchedulerKind::SequentialHalving, SchedulerKind::SuccessiveRejects}) {
    CHECK(run_gensec(config(AlgorithmKind::GenSec, sched, 40), env).selected == ArmList{0});
  }
  CHECK(run_algorithm(config(AlgorithmKind::Uniform, SchedulerKind::SequentialHalving, 4), env).selected == ArmList{0});
  Eigen::MatrixXd deceiver(2, 2);
  deceiver << 0.95, 0.2, 0.5, 0.7;
  GaussianEnvironment denv(gaussian(deceiver, 0.0));
  CHECK(run_gensec(config(AlgorithmKind::GenSec, SchedulerKind::SequentialHalving, 10), denv).selected == ArmList{1});
}

TEST_CASE("zero-noise Pareto runs return the true front") {
  Eigen::MatrixXd two(2, 2);
  two << 1, 0, 0, 1;
  GaussianEnvironment env2(gaussian(two, 0.0));
  CHECK(run_genpsi(config(AlgorithmKind::GenPsi, SchedulerKind::SuccessiveRejects, 10), env2).selected == ArmList{0, 1});
  oracle::Lcg g(61);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = g.integer(2, 12), m = g.integer(2, 3);
    const Eigen::MatrixXd mu = distinct_means(g, k, m);
    GaussianEnvironment env(gaussian(mu, 0.0));
    const ArmList truth = pareto_front(mu);
    for (auto sched : {SchedulerKind::SequentialHalving, SchedulerKind::SuccessiveRejects}) {
      CHECK(run_genpsi(config(AlgorithmKind::GenPsi, sched, 20L * k), env).selected == truth);
    }
    RunConfig u = config(AlgorithmKind::Uniform, SchedulerKind::SequentialHalving, k);
    u.mode = ObjectiveMode::Pareto;
    CHECK(run_algorithm(u, env).selected == truth);
  }
}

TEST_CASE("zero-noise elimination transcript matches empirical gap elimination") {
  oracle::Lcg g(62);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = g.integer(3, 10);
    const Eigen::MatrixXd mu = distinct_means(g, k, 2);
    GaussianEnvironment env(gaussian(mu, 0.0));
    const RunResult run = run_genpsi(config(AlgorithmKind::GenPsi, SchedulerKind::SuccessiveRejects, 10L * k), env);
    // Transcript: one removal per round, the largest gap among active arms, lowest index on ties.
    std::vector<int> active;
    for (int i = 0; i < k; ++i) active.push_back(i);
    const auto front = oracle::front(mu);
    REQUIRE(run.rounds.size() == static_cast<std::size_t>(k - 1));
    for (int r = 0; r < k - 1; ++r) {
      int pick = active[0];
      for (int a : active) {
        if (oracle::pareto_gap(mu, a) > oracle::pareto_gap(mu, pick)) pick = a;
      }
      const bool accept = std::find(front.begin(), front.end(), pick) != front.end();
      CHECK(run.rounds[r].eliminated == ArmList{static_cast<ArmId>(pick)});
      CHECK(run.rounds[r].accepted.size() == (accept ? 1u : 0u));
      active.erase(std::find(active.begin(), active.end(), pick));
    }
  }
}

TEST_CASE("truncation eliminator never accepts") {
  Eigen::MatrixXd mu(4, 2);
  mu << 1.0, 0.0, 0.0, 1.0, 0.6, 0.6, 0.4, 0.4;
  GaussianEnvironment env(gaussian(mu, 0.0));
  RunConfig c = config(AlgorithmKind::GenPsi, SchedulerKind::SequentialHalving, 40);
  c.eliminator = EliminatorKind::Truncate;
  const RunResult r = run_genpsi(c, env);
  for (const auto& log : r.rounds) CHECK(log.accepted.empty());
  CHECK(r.selected.size() <= 1);
}

TEST_CASE("budget safety across pipelines") {
  oracle::Lcg g(63);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = g.integer(2, 20), d = g.integer(1, 4);
    const Eigen::MatrixXd phi = g.matrix(k, d, -1, 1);
    const Eigen::MatrixXd theta = g.matrix(d, 2, -1, 1);
    LinearEnvironment env(make_linear_instance(phi, theta, 0.3));
    const long b = g.integer(k, 40 * k);
    for (auto kind : {AlgorithmKind::GenSec, AlgorithmKind::GenPsi, AlgorithmKind::Uniform}) {
      for (auto est : {EstimatorKind::Mean, EstimatorKind::Linear}) {
        RunConfig c = config(kind, trial % 2 ? SchedulerKind::SequentialHalving : SchedulerKind::SuccessiveRejects, b,
                             -10.0);
        c.estimator = est;
        c.allocator.kind = est == EstimatorKind::Linear ? AllocatorKind::GOptimal : AllocatorKind::Uniform;
        c.enforce_linear_bounds = false;
        c.seed = static_cast<std::uint64_t>(trial);
        try {
          const RunResult r = run_algorithm(c, env);
          CHECK(r.pulls_used <= b);
          long sum = 0;
          for (const auto& log : r.rounds) sum += log.counts.total();
          CHECK(sum == r.pulls_used);
          if (kind != AlgorithmKind::GenPsi) CHECK(r.selected.size() == 1);
        } catch (const ConfigError&) {
          // Mean estimator with fewer first-round pulls than arms is rejected up front.
          CHECK(est == EstimatorKind::Mean);
        }
      }
    }
  }
}

TEST_CASE("runs are deterministic for a fixed seed") {
  oracle::Lcg g(64);
  const Eigen::MatrixXd phi = g.matrix(8, 3, -1, 1);
  const Eigen::MatrixXd theta = g.matrix(3, 2, -1, 1);
  LinearEnvironment env(make_linear_instance(phi, theta, 0.5));
  RunConfig c = config(AlgorithmKind::GenSec, SchedulerKind::SequentialHalving, 600, 0.0);
  c.estimator = EstimatorKind::Linear;
  c.allocator.kind = AllocatorKind::GOptimal;
  c.enforce_linear_bounds = false;
  c.seed = 17;
  CHECK(run_result_json(run_algorithm(c, env)) == run_result_json(run_algorithm(c, env)));
  c.estimator = EstimatorKind::Mlp;
  c.mlp.iters = 100;
  CHECK(run_result_json(run_algorithm(c, env)) == run_result_json(run_algorithm(c, env)));
}

TEST_CASE("linear pipeline enforces its budget bound by default") {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(4, 4);
  LinearEnvironment env(make_linear_instance(phi, Eigen::MatrixXd::Ones(4, 2), 0.1));
  RunConfig c = config(AlgorithmKind::GenSec, SchedulerKind::SequentialHalving, 100, 0.5);
  c.estimator = EstimatorKind::Linear;
  c.allocator.kind = AllocatorKind::GOptimal;
  CHECK_THROWS_AS(run_algorithm(c, env), ConfigError);
  c.budget = 45 * 4 * 2;
  CHECK_NOTHROW(run_algorithm(c, env));
}

TEST_CASE("uniform baseline with the minimum budget") {
  GaussianEnvironment env(gaussian(pqrs(), 1.0));
  const RunResult r = run_algorithm(config(AlgorithmKind::Uniform, SchedulerKind::SequentialHalving, 4), env);
  CHECK(r.pulls_used == 4);
  CHECK(r.selected.size() == 1);
  CHECK_THROWS_AS(run_algorithm(config(AlgorithmKind::Uniform, SchedulerKind::SequentialHalving, 3), env), ConfigError);
}

TEST_CASE("constrained ranking beats the unconstrained best-arm rule on deceiver instances") {
  Eigen::MatrixXd mu(6, 2);
  mu << 0.7, 0.8, 0.95, 0.2, 0.9, 0.3, 0.4, 0.9, 0.3, 0.6, 0.5, 0.75;
  GaussianEnvironment env(gaussian(mu, 0.5));
  int constrained_errors = 0, unconstrained_errors = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RunConfig c = config(AlgorithmKind::GenSec, SchedulerKind::SequentialHalving, 6 * 30, 0.5);
    c.seed = seed;
    constrained_errors += run_gensec(c, env).selected.front() != 0;
    c.tau = -std::numeric_limits<double>::infinity();  // every arm feasible: plain best-arm identification
    unconstrained_errors += run_gensec(c, env).selected.front() != 0;
  }
  const double p1 = constrained_errors / 200.0, p2 = unconstrained_errors / 200.0;
  const double pooled = (p1 + p2) / 2;
  const double z = (p2 - p1) / std::sqrt(pooled * (1 - pooled) * 2 / 200.0);
  CHECK(z > 1.645);
}

TEST_CASE("theorem bound") {
  const double v = theorem_bound(8, 2, 1.0, 270, 25.0);
  CHECK(std::abs(v - 144.0 * std::exp(-0.075)) < 1e-9);
  CHECK(std::abs(v - 133.5950620313116) < 1e-9);
  double prev = v;
  for (long b = 540; b < 100000; b *= 2) {
    const double next = theorem_bound(8, 2, 1.0, b, 25.0);
    CHECK(next < prev);
    prev = next;
  }
  const double e1 = std::log(theorem_bound(8, 2, 1.0, 2700, 25.0) / 144.0);
  const double e2 = std::log(theorem_bound(8, 2, 2.0, 2700, 25.0) / 144.0);
  CHECK(e2 == doctest::Approx(e1 / 4));
  CHECK_THROWS_AS(theorem_bound(8, 2, 1.0, 269, 25.0), ConfigError);
  CHECK_THROWS_AS(theorem_bound(8, 2, 1.0, 270, 0.0), ConfigError);
}

TEST_CASE("algorithm names parse") {
  CHECK(parse_algorithm("gensec") == AlgorithmKind::GenSec);
  CHECK(parse_algorithm("genpsi") == AlgorithmKind::GenPsi);
  CHECK(parse_mode("pareto") == ObjectiveMode::Pareto);
  CHECK(parse_eliminator("truncate") == EliminatorKind::Truncate);
  CHECK_THROWS_AS(parse_algorithm("ucb"), ConfigError);
  CHECK(RunConfig::budget_from_per_arm(20, 30) == 600);
  CHECK_THROWS_AS(RunConfig::budget_from_per_arm(0, 30), ConfigError);
}
