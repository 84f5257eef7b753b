#pragma once

#include <nlohmann/json_fwd.hpp>

#include "mixlab/geometry.hpp"
#include "mixlab/random.hpp"
#include "mixlab/signal.hpp"

namespace mixlab {

/// Speech-like test source: Gaussian noise through a resonant AR(2) filter,
/// amplitude-modulated at a syllabic rate and gated by random pauses.
struct SyntheticSourceConfig {
  Range duration_s{2.5, 4.0};
  /// Resonance frequency of the AR(2) filter, drawn per source.
  Range resonance_hz{300.0, 1500.0};
  double pole_radius = 0.9;
  double modulation_hz = 4.0;
  /// Probability that a pause segment is silenced.
  double silence_probability = 0.2;
  double segment_s = 0.25;
};

void validate(const SyntheticSourceConfig& config);

/// One source at `sample_rate`, normalized to unit RMS over its active part.
[[nodiscard]] Signal synthetic_speech(const SyntheticSourceConfig& config, double sample_rate, Rng& rng);

void to_json(nlohmann::json& j, const SyntheticSourceConfig& config);
void from_json(const nlohmann::json& j, SyntheticSourceConfig& config);

}  // namespace mixlab
