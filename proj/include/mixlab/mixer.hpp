#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mixlab/geometry.hpp"
#include "mixlab/rir.hpp"
#include "mixlab/signal.hpp"

namespace mixlab {

/// Everything needed to evaluate one simulated scene, in the time domain.
///
/// y == sum_k x[k] + n holds exactly because y is formed by the same
/// left-to-right summation (x[0] + x[1] + ... + n) used by check().
struct MixtureBundle {
  double sample_rate = 8000.0;
  double snr = 0.0;
  MultiSignal s;                     // [k][sample], padded
  std::vector<std::size_t> offset;   // [k]
  std::vector<MultiSignal> x;        // [k][d][sample]
  std::vector<MultiSignal> x_early;  // [k][d][sample]
  std::vector<MultiSignal> x_late;   // [k][d][sample]
  MultiSignal n;                     // [d][sample]
  MultiSignal y;                     // [d][sample]

  [[nodiscard]] std::size_t num_sources() const { return s.size(); }
  [[nodiscard]] std::size_t num_mics() const { return y.size(); }
  [[nodiscard]] std::size_t length() const { return y.empty() ? 0 : y.front().size(); }
};

/// Violated bundle invariants, empty when consistent. `tolerance` bounds
/// |x - x_early - x_late|; y is checked for exact equality.
[[nodiscard]] std::vector<std::string> check(const MixtureBundle& bundle, double tolerance = 1e-10);

struct PaddedSources {
  MultiSignal signals;
  std::vector<std::size_t> offsets;
};

/// Zero-pads every source to the longest length. A source of length L_k starts
/// at an offset drawn uniformly from {0, ..., L_max - L_k}; the remainder is
/// padded at the end.
[[nodiscard]] PaddedSources pad_with_random_offset(const MultiSignal& sources, std::uint64_t seed);

struct SpeechImages {
  std::vector<MultiSignal> x;
  std::vector<MultiSignal> x_early;
  std::vector<MultiSignal> x_late;
};

/// Convolves each padded source with its RIRs. The propagation delay
/// rirs.start_sample[k] is removed and the result is cropped to the source
/// length, so x[k][d][n] = (h[k][d] * s[k])[n + start_sample[k]].
[[nodiscard]] SpeechImages render_images(const MultiSignal& sources, const RirSet& rirs);

struct NoisyObservation {
  MultiSignal y;
  MultiSignal n;
};

/// White Gaussian noise with one variance for all channels, set so that the
/// mean power of sum_k x[k] over channels and samples is snr_db above it.
/// An infinite snr_db gives n = 0.
[[nodiscard]] NoisyObservation add_sensor_noise(const std::vector<MultiSignal>& images, double snr_db,
                                                std::uint64_t seed);

/// Padding, rendering and noise with streams derived from `seed`.
[[nodiscard]] MixtureBundle build_scene_bundle(const SceneGeometry& scene, const MultiSignal& sources,
                                               std::uint64_t seed, const RirOptions& options = {});
[[nodiscard]] MixtureBundle build_scene_bundle(const SceneGeometry& scene, const MultiSignal& sources,
                                               std::uint64_t seed, const RirSet& rirs);

/// 10 log10 of the sum-of-images power over the noise power, both measured.
[[nodiscard]] double measured_snr(const MixtureBundle& bundle);

}  // namespace mixlab
