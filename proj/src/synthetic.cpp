#include "mixlab/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mixlab {

void validate(const SyntheticSourceConfig& config) {
  if (!(config.duration_s.low > 0.0) || config.duration_s.high < config.duration_s.low) {
    throw std::invalid_argument("synthetic: invalid duration range");
  }
  if (!(config.resonance_hz.low > 0.0) || config.resonance_hz.high < config.resonance_hz.low) {
    throw std::invalid_argument("synthetic: invalid resonance range");
  }
  if (!(config.pole_radius > 0.0 && config.pole_radius < 1.0)) {
    throw std::invalid_argument("synthetic: pole radius must be in (0, 1)");
  }
  if (!(config.modulation_hz > 0.0)) throw std::invalid_argument("synthetic: modulation rate must be positive");
  if (!(config.silence_probability >= 0.0 && config.silence_probability < 1.0)) {
    throw std::invalid_argument("synthetic: silence probability must be in [0, 1)");
  }
  if (!(config.segment_s > 0.0)) throw std::invalid_argument("synthetic: segment length must be positive");
}

Signal synthetic_speech(const SyntheticSourceConfig& config, double sample_rate, Rng& rng) {
  validate(config);
  const double duration = rng.uniform(config.duration_s.low, config.duration_s.high);
  const double resonance = rng.uniform(config.resonance_hz.low, config.resonance_hz.high);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const auto length = static_cast<std::size_t>(std::llround(duration * sample_rate));
  const auto segment = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.segment_s * sample_rate)));

  const double a1 = 2.0 * config.pole_radius * std::cos(2.0 * std::numbers::pi * resonance / sample_rate);
  const double a2 = -config.pole_radius * config.pole_radius;

  Signal out(length, 0.0);
  double y1 = 0.0;
  double y2 = 0.0;
  bool silent = false;
  for (std::size_t n = 0; n < length; ++n) {
    if (n % segment == 0) silent = rng.uniform() < config.silence_probability;
    const double y = rng.normal() + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    if (silent) continue;
    const double t = static_cast<double>(n) / sample_rate;
    const double envelope = 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * config.modulation_hz * t + phase));
    out[n] = envelope * envelope * y;
  }

  double energy = 0.0;
  std::size_t active = 0;
  for (const double v : out) {
    energy += v * v;
    if (v != 0.0) ++active;
  }
  if (active > 0 && energy > 0.0) {
    const double scale = 1.0 / std::sqrt(energy / static_cast<double>(active));
    for (double& v : out) v *= scale;
  }
  return out;
}

void to_json(nlohmann::json& j, const SyntheticSourceConfig& c) {
  j = nlohmann::json{{"duration_s", c.duration_s},
                     {"resonance_hz", c.resonance_hz},
                     {"pole_radius", c.pole_radius},
                     {"modulation_hz", c.modulation_hz},
                     {"silence_probability", c.silence_probability},
                     {"segment_s", c.segment_s}};
}

void from_json(const nlohmann::json& j, SyntheticSourceConfig& c) {
  if (j.contains("duration_s")) j.at("duration_s").get_to(c.duration_s);
  if (j.contains("resonance_hz")) j.at("resonance_hz").get_to(c.resonance_hz);
  if (j.contains("pole_radius")) j.at("pole_radius").get_to(c.pole_radius);
  if (j.contains("modulation_hz")) j.at("modulation_hz").get_to(c.modulation_hz);
  if (j.contains("silence_probability")) j.at("silence_probability").get_to(c.silence_probability);
  if (j.contains("segment_s")) j.at("segment_s").get_to(c.segment_s);
}

}  // namespace mixlab
