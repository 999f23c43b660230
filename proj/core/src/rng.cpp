#include "psephos/rng.hpp"

#include <cmath>
#include <numbers>

namespace psephos {

double Rng::next_gaussian() {
  // Box-Muller without a cached spare: keeps the per-call draw count fixed.
  double u1 = 1.0 - next_double();  // (0, 1]
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::next_trunc_gaussian(double mean, double sd, double lo, double hi) {
  if (sd <= 0.0) return std::fmin(hi, std::fmax(lo, mean));
  for (int tries = 0; tries < 100; ++tries) {
    double x = mean + sd * next_gaussian();
    if (x >= lo && x <= hi) return x;
  }
  double x = mean + sd * next_gaussian();
  return std::fmin(hi, std::fmax(lo, x));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  Rng mixer(master ^ (tag * 0x9e3779b97f4a7c15ull));
  mixer.next_u64();
  Rng mixer2(mixer.next_u64() ^ (index * 0xd1b54a32d192ed03ull));
  mixer2.next_u64();
  return mixer2.next_u64();
}

}  // namespace psephos
