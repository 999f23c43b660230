#pragma once

#include <cstdint>

namespace psephos {

// Deterministic splitmix64 generator. Streams are derived by mixing a master
// seed with stream/index tags, so per-box or per-replicate streams can be
// evaluated in any order (or in parallel) with identical results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Index in [0, n). Modulo bias is < n / 2^64, irrelevant at resampling scale.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  double next_gaussian();

  // Rejection sampling; clamps into [lo, hi] after 100 failed draws.
  double next_trunc_gaussian(double mean, double sd, double lo, double hi);

 private:
  std::uint64_t state_;
};

// Stable stream derivation: hashes (master, tag, index) through splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index);

}  // namespace psephos
