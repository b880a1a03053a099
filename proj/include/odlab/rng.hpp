#pragma once

// Deterministic random number generation. Every stream is a pure function of
// (seed, key...) so results are reproducible bit-for-bit across runs and do
// not depend on call order elsewhere in the program.

#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>

namespace odlab {

// splitmix64 finalizer; also used to combine keys into sub-stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (0x9E3779B97F4A7C15ull + b));
}

// FNV-1a over a label; lets streams be keyed by purpose ("templates", ...).
inline std::uint64_t key_of(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

  static Rng keyed(std::uint64_t seed, std::uint64_t key) {
    return Rng(mix64(seed, key));
  }
  static Rng keyed(std::uint64_t seed, std::string_view label,
                   std::uint64_t key = 0) {
    return Rng(mix64(mix64(seed, key_of(label)), key));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Box-Muller; draws two uniforms per call, no state carried over.
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    double u1 = unit();
    double u2 = unit();
    while (u1 <= 0.0) u1 = unit();  // log(0) guard
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace odlab
