#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ivimpute::rng {

// Philox 4x32-10 (Salmon et al., "Parallel random numbers: as easy as
// 1, 2, 3", SC 2011). Counter-based: the generator is a pure function of
// (key, counter), so replication streams never need to be advanced past
// each other.
inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox4x32(
    std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key,
    int rounds = 10) {
  for (int r = 0; r < rounds; ++r) {
    const std::uint64_t p0 =
        static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 =
        static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream purposes; part of the key derivation, so adding one never shifts
// the draws of another.
enum class Stream : std::uint64_t {
  dgp = 0x01,
  mcar = 0x02,
  fixture = 0x7F,
};

// One independent random stream keyed by (seed, stream, substream).
// Consumption order is fixed; the same construction always yields the
// same sequence regardless of what other streams are doing.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0,
             std::uint64_t subsubstream = 0) {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ static_cast<std::uint64_t>(stream));
    k = splitmix64(k ^ substream);
    k = splitmix64(k ^ subsubstream);
    key_ = {static_cast<std::uint32_t>(k),
            static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = philox4x32({static_cast<std::uint32_t>(block_),
                         static_cast<std::uint32_t>(block_ >> 32), 0u, 0u},
                        key_);
      ++block_;
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform on the open interval (0, 1); never returns 0 or 1, so it is
  // safe under log().
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> buf_{};
  std::uint64_t block_ = 0;
  int pos_ = 4;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace ivimpute::rng
