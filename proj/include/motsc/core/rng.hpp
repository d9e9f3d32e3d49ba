#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>

#include "motsc/core/error.hpp"

namespace motsc::core {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable seed derivation for independent named streams. Evaluation streams
// use their own tags, so they never collide with training streams.
inline uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index = 0) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
  for (char c : tag) {
    h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ splitmix64(h ^ splitmix64(index)));
}

// mt19937_64 wrapper with explicit, portable draw algorithms. The standard
// distributions are implementation-defined, so uniform/poisson are spelled
// out here to keep trajectories reproducible across standard libraries.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) by rejection (unbiased).
  uint64_t uniform_below(uint64_t n) {
    if (n == 0) throw contract_error("Rng::uniform_below: n must be positive");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    if (hi < lo) throw contract_error("Rng::uniform_int: empty range");
    return lo + static_cast<int>(uniform_below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Knuth's product-of-uniforms method; fine for the small per-tick rates
  // used by the simulator (lambda well below 1).
  int poisson(double lambda) {
    if (lambda < 0.0) throw contract_error("Rng::poisson: negative rate");
    if (lambda == 0.0) return 0;
    const double threshold = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > threshold);
    return k - 1;
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<uint64_t>(last - first);
    for (uint64_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[uniform_below(i)]);
    }
  }

  void save(std::ostream& os) const { os << engine_; }
  void load(std::istream& is) { is >> engine_; }

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace motsc::core
