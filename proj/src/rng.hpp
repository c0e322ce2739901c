#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace domq {

// splitmix64; used both as a stream-derivation hash and as the engine's
// output mixer. Keeping the generator self-contained pins the exact
// random sequence independently of the standard library implementation,
// which is what makes whole training runs bit-reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {
    // decorrelate trivially related seeds
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform integer in [0, n), n > 0
  std::uint64_t next_below(std::uint64_t n) {
    // multiply-shift; bias is negligible for the small n used here but we
    // reject anyway to keep the distribution exact
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  int next_int(int n) { return static_cast<int>(next_below(static_cast<std::uint64_t>(n))); }

  // uniform double in [0, 1) with 53 random bits
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform double in [lo, hi)
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // standard normal via polar Box-Muller with a cached spare
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace domq
