#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace spice {

/// Deterministic 64-bit generator (SplitMix64, Steele/Lea/Flood 2014).
/// Pure integer arithmetic, so streams are identical across platforms.
/// Normal variates come from the Box-Muller transform of two uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1]: 53 mantissa bits, never exactly zero.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller; the sine partner is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a master seed plus stream ids,
/// by running the ids through the SplitMix64 mixer. Used to give each
/// replication / fold / split its own reproducible generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id_a,
                                 std::uint64_t id_b = 0, std::uint64_t id_c = 0) {
  Rng mix(master);
  mix.next_u64();
  Rng mix2(mix.next_u64() ^ (id_a * 0x9e3779b97f4a7c15ULL));
  mix2.next_u64();
  Rng mix3(mix2.next_u64() ^ (id_b * 0xbf58476d1ce4e5b9ULL));
  mix3.next_u64();
  Rng mix4(mix3.next_u64() ^ (id_c * 0x94d049bb133111ebULL));
  return mix4.next_u64();
}

}  // namespace spice
