#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixlab {

/// Seedable, splittable random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. All distributions are implemented here rather than taken from
/// <random>, because the library distributions are implementation-defined and
/// would make generated datasets depend on the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent child stream for (seed, index), e.g. one per scene.
  [[nodiscard]] static Rng derive(std::uint64_t seed, std::uint64_t index);
  /// Independent child stream keyed by a name, e.g. "noise" or "padding".
  [[nodiscard]] static Rng derive(std::uint64_t seed, std::string_view name);

  /// Child seed usable to construct further streams.
  [[nodiscard]] static std::uint64_t mix(std::uint64_t seed, std::uint64_t index);
  [[nodiscard]] static std::uint64_t mix(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double low, double high);
  /// Uniform integer on the closed range [low, high], unbiased.
  std::uint64_t uniform_int(std::uint64_t low, std::uint64_t high);
  /// Standard normal via Box-Muller.
  double normal();
  /// Exponential with unit rate.
  double exponential();

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace mixlab
