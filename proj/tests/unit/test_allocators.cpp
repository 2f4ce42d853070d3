#include "doctest.h"

#include <cmath>
#include <numeric>

#include "mopx/allocators.hpp"
#include "mopx/errors.hpp"
#include "oracles.hpp"

using namespace mopx;

namespace {

int rank_of(const Eigen::MatrixXd& phi) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
  const double smax = svd.singularValues()(0);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) r += svd.singularValues()(i) > 1e-9 * std::max(1.0, smax);
  return r;
}

DesignWeights weights_of(std::initializer_list<double> w) {
  DesignWeights d;
  d.weights = Eigen::VectorXd(static_cast<Eigen::Index>(w.size()));
  int i = 0;
  for (double x : w) d.weights[i++] = x;
  return d;
}

}  // namespace

TEST_CASE("uniform allocation gives the remainder to the lowest indices") {
  CHECK(allocate_uniform(7, {0, 1, 2}).counts == std::vector<long>{3, 2, 2});
  CHECK(allocate_uniform(6, {0, 1, 2}).counts == std::vector<long>{2, 2, 2});
  const PullCounts few = allocate_uniform(2, {0, 1, 2});
  CHECK(few.counts == std::vector<long>{1, 1, 0});
  CHECK(few.warning.has_value());
  const PullCounts unordered = allocate_uniform(5, {4, 1});
  CHECK(unordered.arms == ArmList{1, 4});
  CHECK(unordered.count_of(1) == 3);
  CHECK_THROWS_AS(allocate_uniform(5, {}), DomainError);
}

TEST_CASE("pull sequences follow the round-robin and block rules") {
  const PullCounts c = allocate_uniform(7, {0, 1, 2});
  CHECK(round_robin_sequence(c) == std::vector<ArmId>{0, 1, 2, 0, 1, 2, 0});
  CHECK(block_sequence(c) == std::vector<ArmId>{0, 0, 0, 1, 1, 2, 2});
}

TEST_CASE("orthonormal features give the uniform design") {
  const DesignWeights d = solve_g_optimal(Eigen::MatrixXd::Identity(3, 3), 0.1);
  CHECK(d.active_dim == 3);
  CHECK(d.objective_value == doctest::Approx(3.0).epsilon(1e-9));
  for (int i = 0; i < 3; ++i) CHECK(d.weights[i] == doctest::Approx(1.0 / 3));
}

TEST_CASE("identical arms form a rank-one design") {
  Eigen::MatrixXd phi(2, 1);
  phi << 1, 1;
  const DesignWeights d = solve_g_optimal(phi, 0.1);
  CHECK(d.active_dim == 1);
  CHECK(d.objective_value <= 1.1);
  CHECK(d.objective_value >= 1.0 - 1e-9);
  CHECK(d.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("mirror descent agrees with a Frank-Wolfe oracle on random unit vectors") {
  oracle::Lcg g(5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd phi = g.gaussian(10, 3);
    phi.rowwise().normalize();
    const DesignWeights d = solve_g_optimal(phi, 0.1);
    const double fw = oracle::frank_wolfe_g(phi);
    CHECK(fw == doctest::Approx(3.0).epsilon(1e-5));
    CHECK(d.objective_value <= 3.3);
    CHECK(d.objective_value >= fw - 1e-6);
    CHECK(oracle::g_value(phi, d.weights) == doctest::Approx(d.objective_value).epsilon(1e-8));
  }
}

TEST_CASE("design properties on random feature sets") {
  oracle::Lcg g(77);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = g.integer(1, 10);
    const int k = g.integer(1, 50);
    Eigen::MatrixXd phi = g.gaussian(k, d);
    if (trial % 4 == 0 && d > 1) phi.col(d - 1) = phi.col(0);  // rank-deficient span
    const int dact = rank_of(phi);
    DesignWeights w = solve_g_optimal(phi, 0.1);
    CHECK(w.active_dim == static_cast<std::size_t>(dact));
    CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w.weights.minCoeff() >= 0.0);
    CHECK(w.objective_value <= 1.1 * dact + 1e-9);
    CHECK(w.objective_value >= dact - 1e-7);
    for (std::size_t i = 1; i < w.best_objective_trace.size(); ++i) {
      REQUIRE(w.best_objective_trace[i] <= w.best_objective_trace[i - 1]);
    }
    const long n = 45L * dact + g.integer(0, 100);
    ArmList active(k);
    std::iota(active.begin(), active.end(), 0);
    const PullCounts c = round_design(n, w, 1.0 / 3, active, phi);
    CHECK(c.total() == n);
    // Pulled arms span the active span.
    Eigen::MatrixXd pulled(0, d);
    for (int i = 0; i < k; ++i) {
      if (c.counts[i] > 0) {
        pulled.conservativeResize(pulled.rows() + 1, Eigen::NoChange);
        pulled.row(pulled.rows() - 1) = phi.row(i);
      }
    }
    CHECK(rank_of(pulled) == dact);
    for (int i = 0; i < k; ++i) CHECK(std::abs(c.counts[i] - n * w.weights[i]) < 1.0 + dact);
  }
}

TEST_CASE("largest remainder rounding with lowest-index ties") {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(3, 3);
  CHECK(round_design(10, weights_of({0.5, 0.3, 0.2}), 0.3, {0, 1, 2}, phi, false).counts ==
        std::vector<long>{5, 3, 2});
  CHECK(round_design(10, weights_of({0.55, 0.25, 0.20}), 0.3, {0, 1, 2}, phi, false).counts ==
        std::vector<long>{6, 2, 2});
  CHECK(round_design(5, weights_of({1.0, 0.0}), 0.3, {0, 1}, Eigen::MatrixXd::Identity(2, 2), false).counts ==
        std::vector<long>{4, 1});
}

TEST_CASE("rounding validates kappa and the minimum round size") {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(round_design(100, weights_of({0.5, 0.5}), 0.0, {0, 1}, phi), ConfigError);
  CHECK_THROWS_AS(round_design(100, weights_of({0.5, 0.5}), 0.5, {0, 1}, phi), ConfigError);
  CHECK_THROWS_AS(round_design(89, weights_of({0.5, 0.5}), 1.0 / 3, {0, 1}, phi), ConfigError);
  CHECK_NOTHROW(round_design(90, weights_of({0.5, 0.5}), 1.0 / 3, {0, 1}, phi));
}

TEST_CASE("allocate composes the design with the block pull order") {
  Eigen::MatrixXd phi(4, 2);
  phi << 1, 0, 0, 1, 1, 1, 5, 5;
  AllocatorConfig cfg;
  cfg.kind = AllocatorKind::GOptimal;
  const Allocation a = allocate(cfg, 100, {0, 1, 3}, phi);
  CHECK(a.counts.total() == 100);
  CHECK(a.sequence.size() == 100);
  CHECK(a.sequence == block_sequence(a.counts));
  CHECK(a.design_objective.has_value());

  cfg.kind = AllocatorKind::Uniform;
  const Allocation u = allocate(cfg, 7, {0, 2, 3}, phi);
  CHECK(u.sequence == std::vector<ArmId>{0, 2, 3, 0, 2, 3, 0});
  CHECK(parse_allocator("g-optimal") == AllocatorKind::GOptimal);
  CHECK_THROWS_AS(parse_allocator("greedy"), ConfigError);
}
