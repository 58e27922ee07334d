#pragma once

#include <cstdint>
#include <random>

namespace pulseopt {

/// Derives a well-mixed seed for a named sub-stream of a root seed
/// (splitmix64 finalizer). Sub-streams keep initialization, selection,
/// crossover and mutation draws independent of each other.
inline uint64_t derive_seed(uint64_t root, uint64_t stream_id) {
  uint64_t z = root + (stream_id + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// mt19937_64 wrapper with portable distributions. std:: distribution
/// objects are implementation-defined, so uniform doubles and ints are
/// generated from raw bits to keep runs reproducible everywhere.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Uniform integer in [0, n); unbiased via rejection.
  uint64_t uniform_int(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pulseopt
