#pragma once

#include "birkhoff/types.hpp"

#include <cstdint>

namespace birkhoff {

// Deterministic generator with a fixed algorithm so seeded experiments are
// reproducible byte-for-byte across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

  Complex complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return Complex(re, im) / std::sqrt(2.0);
  }

  Matrix ginibre(int rows, int cols) {
    Matrix g(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) g(i, j) = complex_gaussian();
    return g;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a master seed with task coordinates into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  SplitMix64 mix(master ^ (0x51d9f3a7c2b4e681ULL + a * 0x9e3779b97f4a7c15ULL));
  mix.next();
  std::uint64_t s = mix.next() ^ (b * 0xda942042e4dd58b5ULL);
  SplitMix64 mix2(s);
  return mix2.next();
}

}  // namespace birkhoff
