#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace ampsi {

// splitmix64 finalizer. Used to derive child seeds from a master seed so that
// matrix / signal / noise / per-trial streams are independent and any one of
// them can be regenerated in isolation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  return mix64(master ^ mix64(stream_id));
}

// Fixed stream ids for the sub-streams of one experiment.
namespace stream {
inline constexpr std::uint64_t matrix = 0x4d41545249580000ull;
inline constexpr std::uint64_t signal = 0x5349474e414c0000ull;
inline constexpr std::uint64_t noise = 0x4e4f495345000000ull;
inline constexpr std::uint64_t se = 0x5345504154480000ull;
inline constexpr std::uint64_t trial_base = 0x545249414c000000ull;
}  // namespace stream

// mt19937_64 with explicit uniform->double and polar Gaussian transforms.
// The standard distributions are implementation-defined sequences; fixing the
// transforms keeps streams replayable for a given seed on any toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal, Marsaglia polar method.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Uniform integer on [0, bound), rejection sampled.
  std::uint64_t integer(std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ampsi
