#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace genlab {

// splitmix64: tiny, fast, and good enough statistically for desk-scale
// Monte Carlo. Every consumer owns its own stream keyed by
// (master_seed, purpose, index) so parallel sampling stays reproducible.
inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t hash_str(std::string_view s) {
  // FNV-1a
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  return splitmix64_next(s);
}

class RngStream {
 public:
  explicit RngStream(uint64_t seed) : state_(seed) {
    // warm up so nearby seeds decorrelate
    splitmix64_next(state_);
    splitmix64_next(state_);
  }
  RngStream(uint64_t master_seed, std::string_view purpose, uint64_t index = 0)
      : RngStream(mix_seed(mix_seed(master_seed, hash_str(purpose)), index)) {}

  uint64_t next_u64() { return splitmix64_next(state_); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // standard normal via Marsaglia polar method; the spare is discarded so a
  // stream's consumption count depends only on the draw sequence.
  double normal() {
    for (;;) {
      double u = 2.0 * uniform() - 1.0;
      double v = 2.0 * uniform() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

  // truncation by resampling: keeps the density a renormalized Gaussian
  double truncated_normal(double psi) {
    for (;;) {
      double z = normal();
      if (std::abs(z) <= psi) return z;
    }
  }

  size_t uniform_index(size_t n) {
    // rejection to avoid modulo bias
    uint64_t bound = n;
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
      uint64_t x = next_u64();
      if (x < limit) return static_cast<size_t>(x % bound);
    }
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace genlab
