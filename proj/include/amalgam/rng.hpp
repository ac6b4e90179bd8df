#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace amalgam {

// splitmix64 step (Vigna). Used both as the generator core and to derive
// substream seeds, so runs are reproducible bit-for-bit on any platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Self-contained deterministic RNG. Gaussians come from a hand-rolled
// Box-Muller so output does not depend on the standard library's
// distribution implementation. Substreams: stream(i) reseeds with
// mix(seed, i), so trial i is independent of how much earlier streams
// consumed. Documented split: stream seed = splitmix64(master ^ (i+1)*PHI).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {
    // avoid the all-zero fixed point of the mixer's first step being dull
    if (seed == 0) state_ = 0x6a09e667f3bcc909ULL;
  }

  std::uint64_t u64() { return splitmix64(state_); }

  // uniform on [0,1)
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  // standard real gaussian, Box-Muller with cached second value
  double gauss() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 1.0 - uniform();  // (0,1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // complex gaussian with E|z|^2 = 1
  std::complex<double> cgauss() {
    double re = gauss();
    double im = gauss();
    return {re * 0.7071067811865475244, im * 0.7071067811865475244};
  }

  // independent substream i of the master seed
  Rng stream(std::uint64_t i) const {
    std::uint64_t s = seed_ ^ ((i + 1) * 0x9e3779b97f4a7c15ULL);
    return Rng(splitmix64(s));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace amalgam
