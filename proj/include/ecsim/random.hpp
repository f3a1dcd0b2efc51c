#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace ecsim {

// SplitMix64 finalizer. Used for seed derivation; stable across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based seed split: the derived seed depends only on the master seed
// and the coordinates, never on execution order.
//   h = splitmix64(master ^ splitmix64(a ^ splitmix64(b ^ splitmix64(c))))
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b, std::uint64_t c) noexcept {
  return splitmix64(master ^ splitmix64(a ^ splitmix64(b ^ splitmix64(c))));
}

// Seeded random stream. Wraps mt19937_64 and implements its own
// distributions, since the std:: distributions are not specified bit-exactly
// and differ between standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  // Uniform in [0, 1), 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound). bound must be > 0. Rejection sampling, no
  // modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ecsim
