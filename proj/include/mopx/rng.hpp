#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace mopx {

// Counter-based random stream keyed by (seed, path). Two streams with the same
// seed and path produce the same sequence on every platform; children derived
// with distinct path components are independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::vector<std::uint64_t> path = {});

  RngStream child(std::uint64_t component) const;
  RngStream child(std::initializer_list<std::uint64_t> components) const;

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }
  std::uint64_t draws() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (two raw draws, second angle discarded).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace mopx
