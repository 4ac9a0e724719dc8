#pragma once
// xoshiro256++ with splitmix64 seeding.  Substreams are keyed by (master seed,
// stream index) so that block b of a Monte Carlo run always sees the same draws
// no matter which thread executes it.

#include <cstdint>
#include <cmath>
#include <limits>

namespace cmj {

inline std::uint64_t splitmix64_next(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Collapse (master, stream) into a single well-mixed 64-bit state.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64_next(s);
  s = a ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  std::uint64_t b = splitmix64_next(s);
  return b;
}

class Rng {
  std::uint64_t s_[4];

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : s_) w = splitmix64_next(s);
  }
  Rng(std::uint64_t master, std::uint64_t stream)
      : Rng(substream_seed(master, stream)) {}

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1): 53-bit mantissa.
  double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }
  // Uniform on (0, 1]: safe under log() and negative powers.
  double uniform_pos() { return double(((*this)() >> 11) + 1) * 0x1.0p-53; }

  double exponential(double mean) { return -mean * std::log(uniform_pos()); }

  // P(V >= x) = (x/x0)^(-g) for x >= x0.
  double pareto(double g, double x0) {
    return x0 * std::pow(uniform_pos(), -1.0 / g);
  }

  // Uniform integer in {0, ..., n-1} (n > 0), Lemire-style rejection.
  std::uint64_t below(std::uint64_t n) {
    for (;;) {
      std::uint64_t x = (*this)();
      std::uint64_t hi = static_cast<std::uint64_t>(
          (static_cast<unsigned __int128>(x) * n) >> 64);
      std::uint64_t lo = x * n;
      if (lo >= n || lo >= (0 - n) % n) return hi;
    }
  }
};

}  // namespace cmj
