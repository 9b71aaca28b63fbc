#ifndef PAM_RNG_HPP
#define PAM_RNG_HPP

// Reproducible random streams keyed by (seed, stream index). Every Monte
// Carlo sample owns its own stream, so results do not depend on how samples
// are distributed over workers.

#include <cmath>
#include <cstdint>
#include <limits>

namespace pam {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** seeded from a (seed, index) key. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t k = seed;
    std::uint64_t key = splitmix64(k);
    std::uint64_t j = index ^ 0x5851f42d4c957f2dULL;
    key ^= splitmix64(j);
    for (auto& w : s_) w = splitmix64(key);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate, by inversion.
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    // multiply-shift; bias is at most n / 2^64
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
};

}  // namespace pam

#endif  // PAM_RNG_HPP
