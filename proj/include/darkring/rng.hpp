#ifndef DARKRING_RNG_HPP
#define DARKRING_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "darkring/constants.hpp"

namespace darkring {

/// Philox4x32-10 counter-based generator. Every call is
/// a pure function of (counter, key), so a stream can be addressed directly by
/// (seed, atom, step, purpose) without any shared state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

/// Purposes that get disjoint streams.
enum class StreamTag : std::uint32_t { position = 1, velocity = 2, flip = 3, recoil = 4 };

/// Random numbers for one (seed, atom, step, purpose) cell: four 32-bit words,
/// i.e. two uniforms with 53-bit resolution or two normals.
class RandomCell {
 public:
  RandomCell(std::uint64_t seed, std::uint64_t atom, std::uint64_t step, StreamTag tag) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                  static_cast<std::uint32_t>(atom), static_cast<std::uint32_t>(tag) ^
                                                                        (static_cast<std::uint32_t>(atom >> 32) << 8)};
    words_ = Philox4x32::generate(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  }

  /// Uniform in (0, 1); never returns 0, so it is safe under log().
  [[nodiscard]] double uniform(int i) const {
    const std::uint64_t bits = (static_cast<std::uint64_t>(words_[2 * i]) << 21) ^ (words_[2 * i + 1] >> 11);
    return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) * 0x1.0p-53;
  }

  /// Two independent standard normals by Box-Muller.
  [[nodiscard]] std::array<double, 2> normals() const {
    const double r = std::sqrt(-2.0 * std::log(uniform(0)));
    const double th = constants::two_pi * uniform(1);
    return {r * std::cos(th), r * std::sin(th)};
  }

  [[nodiscard]] const Philox4x32::Counter& words() const noexcept { return words_; }

 private:
  Philox4x32::Counter words_{};
};

}  // namespace darkring

#endif  // DARKRING_RNG_HPP
