#pragma once

/** @file
 * Reproducible random streams for Monte-Carlo trials.
 *
 * Each trial owns a std::mt19937_64 (output sequence fixed by the standard)
 * seeded with trial_seed(seed, index), a SplitMix64 mix of the run seed and
 * the trial index. Trials never share a stream, so the order in which they
 * run does not matter. Uniforms take the top 53 bits of one engine output;
 * normals use the Box-Muller transform and return the sine branch on every
 * second call. The library's distributions are not used because their
 * output is implementation defined. Bitwise equality across platforms
 * additionally depends on std::log / std::cos / std::sin agreeing.
 */

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace rlsbias {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
  return splitmix64(seed ^ splitmix64(trial));
}

class TrialRng {
 public:
  explicit TrialRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal.
  double normal() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace rlsbias
