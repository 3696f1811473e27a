#pragma once

#include <cmath>
#include <cstdint>

namespace unemo {

// Counter-based generator: every draw is a pure function of (seed, counter),
// so sequences are identical across platforms and a stream can be split
// without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), counter_(0) {}

  std::uint64_t next_u64() { return mix(seed_, counter_++); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    // 64-bit multiply-shift; bias is negligible for the small n used here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Box-Muller on two fresh counters; no cached spare so the draw count
  // stays a pure function of the counter.
  double normal() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    const double u2 =
        static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Independent stream derived from this generator's seed.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ 0x5851f42d4c957f2dULL, stream));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over a keyed counter
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace unemo
