#pragma once

// Counter-based random number generator.
//
// Each (seed, stream) pair names an independent reproducible sequence: the
// generator keeps a 64-bit counter and hashes (key, counter) through a
// splitmix64-style finalizer to produce each output word.  Because a draw
// depends only on (seed, stream, counter), trajectories can be assigned fixed
// stream ids and produce identical numbers regardless of scheduling or how
// many other streams were consumed in between.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace wndyn {

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix_(seed ^ mix_(stream + 0x9E3779B97F4A7C15ULL))), ctr_(0) {}

  /// Next raw 64-bit word.
  std::uint64_t next_u64() {
    const std::uint64_t x = key_ + (++ctr_) * 0x9E3779B97F4A7C15ULL;
    return mix_(x);
  }

  /// Uniform draw in the half-open interval (0, 1]; never returns 0, so it is
  /// safe as the argument of a logarithm.
  double uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // top 53 bits
    return static_cast<double>(bits + 1) * 0x1p-53;
  }

  /// Standard normal draw (Box-Muller, pair cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(phi);
    have_cached_ = true;
    return r * std::cos(phi);
  }

  /// Normal draw with the given mean and standard deviation.
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  static std::uint64_t mix_(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t key_;
  std::uint64_t ctr_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace wndyn
