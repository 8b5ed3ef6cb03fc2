#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace mnls {

/// Purpose tag mixed into every counter so that independent streams never collide.
enum class StreamRole : std::uint32_t {
  Design = 1,
  Noise = 2,
  NoiseRedraw = 3,
  NewDesign = 4,
  Probe = 5,
  BaiYin = 6,
  Basis = 7,
  ThetaBulk = 8,
};

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). Each call is a pure
/// function of (key, counter), which lets any entry of a random matrix be regenerated
/// independently of evaluation order.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(std::uint64_t key, Block counter) noexcept {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k0 += kWeyl0;
        k1 += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * counter[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      counter = {hi1 ^ counter[1] ^ k0, lo1, hi0 ^ counter[3] ^ k1, lo0};
    }
    return counter;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Two 53-bit uniforms on the open interval (0, 1) keyed by (seed, row, col, role, sub).
inline std::pair<double, double> keyed_uniform_pair(std::uint64_t seed, std::uint64_t row,
                                                    std::uint32_t col, StreamRole role,
                                                    std::uint32_t sub = 0) noexcept {
  const Philox4x32::Block out = Philox4x32::generate(
      seed, {static_cast<std::uint32_t>(row), col,
             static_cast<std::uint32_t>(role) | (sub << 8), static_cast<std::uint32_t>(row >> 32)});
  const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  constexpr double kScale = 0x1.0p-53;
  return {(static_cast<double>(a >> 11) + 0.5) * kScale,
          (static_cast<double>(b >> 11) + 0.5) * kScale};
}

/// Standard normal pair by Box-Muller.
inline std::pair<double, double> keyed_normal_pair(std::uint64_t seed, std::uint64_t row,
                                                   std::uint32_t col, StreamRole role,
                                                   std::uint32_t sub = 0) noexcept {
  const auto [u1, u2] = keyed_uniform_pair(seed, row, col, role, sub);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// SplitMix64 finalizer; used to derive sub-seeds from integers.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace mnls
