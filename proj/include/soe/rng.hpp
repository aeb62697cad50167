#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace soe {

// splitmix64 finalizer; used both for seed derivation and for the
// counter-based dropout stream.
inline uint64_t hash_u64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  return hash_u64(a ^ (hash_u64(b) + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

// Map a hash to [0, 1). 53 mantissa bits.
inline double hash_to_unit(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Deterministic RNG. mt19937_64 has a fully specified output sequence, and
// all distributions here are implemented explicitly, so draws are
// reproducible across platforms and standard libraries.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive, rejection-sampled (no modulo bias).
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
  }

  // Standard normal via Box-Muller (cosine branch only, no cached spare).
  double normal() {
    double u1 = 1.0 - uniform(); // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
  std::mt19937_64 gen_;
};

} // namespace soe
