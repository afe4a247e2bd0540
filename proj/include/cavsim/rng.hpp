#ifndef CAVSIM_RNG_HPP
#define CAVSIM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace cavsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based deterministic generator: every draw is a pure function of
/// (seed, stream, counter), so simulations replay identically regardless of
/// draw order and platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  double uniform01(std::uint64_t stream, std::uint64_t counter) const {
    const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed_) ^ stream) + counter);
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  }

  double uniform(std::uint64_t stream, std::uint64_t counter, double lo, double hi) const {
    return lo + uniform01(stream, counter) * (hi - lo);
  }

  double exponential(std::uint64_t stream, std::uint64_t counter, double rate) const {
    return -std::log1p(-uniform01(stream, counter)) / rate;
  }

 private:
  std::uint64_t seed_;
};

}  // namespace cavsim

#endif  // CAVSIM_RNG_HPP
