#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "mopx/rng.hpp"

using mopx::RngStream;

TEST_CASE("equal seed and path give identical draws") {
  RngStream a(42, {1, 2, 3});
  RngStream b(42, {1, 2, 3});
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.draws() == 1000);
}

TEST_CASE("child streams match streams built from the full path") {
  RngStream root(7);
  RngStream via_child = root.child(3).child(9);
  RngStream direct(7, {3, 9});
  RngStream via_list = root.child({3, 9});
  for (int i = 0; i < 100; ++i) {
    const auto x = direct.next_u64();
    CHECK(via_child.next_u64() == x);
    CHECK(via_list.next_u64() == x);
  }
}

TEST_CASE("deriving children does not advance the parent") {
  RngStream a(5), b(5);
  (void)a.child(1);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct paths and seeds diverge") {
  std::set<std::uint64_t> first;
  for (std::uint64_t s = 0; s < 50; ++s) {
    first.insert(RngStream(s).next_u64());
    first.insert(RngStream(0, {s}).next_u64());
  }
  CHECK(first.size() == 100);
}

TEST_CASE("uniform draws stay in the open unit interval with the right moments") {
  RngStream r(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(std::abs(s / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(s2 / n - 1.0 / 3) < 0.005);
}

TEST_CASE("normal draws have zero mean and unit variance") {
  RngStream r(12);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  CHECK(std::abs(s / n) < 5 / std::sqrt(double(n)));
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(s4 / n - 3.0) < 0.1);
}

TEST_CASE("below covers its range uniformly") {
  RngStream r(13);
  std::vector<int> hist(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(7);
    REQUIRE(v < 7);
    ++hist[v];
  }
  for (int h : hist) CHECK(std::abs(h - n / 7) < 5 * std::sqrt(n / 7.0));
}

TEST_CASE("mix64 is a bijection on a sample") {
  std::set<std::uint64_t> out;
  for (std::uint64_t i = 0; i < 10000; ++i) out.insert(mopx::mix64(i));
  CHECK(out.size() == 10000);
}
