#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mixlab/geometry.hpp"
#include "mixlab/signal.hpp"

namespace mixlab {

enum class ReflectionModel {
  /// beta = sqrt(1 - alpha), alpha from Sabine.
  kSabine,
  /// beta chosen so that the direction-averaged image-source energy decay of
  /// the room has the requested T60 (T20 fit, -5 to -25 dB).
  kDecayMatched,
};

struct RirOptions {
  /// Highest reflection order kept; negative keeps every image that arrives
  /// inside the RIR window.
  int max_order = -1;
  /// RIR length in samples; 0 selects ceil(1.25 * T60 * fs).
  std::size_t rir_length = 0;
  double sound_speed = 343.0;
  /// Hann-windowed sinc fractional-delay kernel length (odd).
  int kernel_taps = 81;
  double early_window_s = 0.050;
  ReflectionModel reflection_model = ReflectionModel::kDecayMatched;
  /// Allen-Berkley DC-blocking high-pass at 100 Hz.
  bool high_pass = true;
};

/// Impulse responses for every (source, mic) pair of one scene.
///
/// `h` keeps the time of flight. `start_sample[k]` is the propagation delay
/// removed from every channel of source k when rendering images, and
/// `early_end[k] = start_sample[k] + round(early_window * fs)` is the first
/// sample of the late part. h_early + h_late == h holds exactly.
struct RirSet {
  double sample_rate = 8000.0;
  double t60_target = 0.0;
  double reflection_coefficient = 0.0;
  std::vector<MultiSignal> h;  // [source][mic][sample]
  std::vector<MultiSignal> h_early;
  std::vector<MultiSignal> h_late;
  std::vector<std::size_t> start_sample;
  std::vector<std::size_t> early_end;

  [[nodiscard]] std::size_t num_sources() const { return h.size(); }
  [[nodiscard]] std::size_t num_mics() const { return h.empty() ? 0 : h.front().size(); }
  [[nodiscard]] std::size_t length() const;
};

/// Sabine absorption 0.161 V / (S T60). Throws NumericalError when >= 1.
[[nodiscard]] double sabine_absorption(const Vec3& room_dims, double t60);

/// Uniform wall reflection coefficient sqrt(1 - alpha) with alpha from
/// Sabine's formula. An infinite T60 gives 1.
[[nodiscard]] double t60_to_reflection(const Vec3& room_dims, double t60);

/// Reflection coefficient whose modeled Schroeder decay hits `t60`. The model
/// integrates image energy over directions: an image in direction u collects
/// sum_i |u_i| / L_i reflections per meter of path.
[[nodiscard]] double decay_matched_reflection(const Vec3& room_dims, double t60, double sound_speed = 343.0);

/// T60 (T20 fit) predicted by that model for a given reflection coefficient.
[[nodiscard]] double modeled_t60(const Vec3& room_dims, double reflection, double sound_speed = 343.0);

/// In-place Allen-Berkley high-pass with a 100 Hz corner.
void allen_berkley_high_pass(Signal& h, double sample_rate);

[[nodiscard]] std::size_t default_rir_length(double t60, double sample_rate);

/// Image-method response between one source and one mic, with full time of
/// flight, `length` samples long.
[[nodiscard]] Signal image_method_response(const Vec3& room_dims, const Vec3& source, const Vec3& mic,
                                           double reflection, double sample_rate, std::size_t length,
                                           const RirOptions& options = {});

/// All responses for a scene, with start detection and the early/late split.
[[nodiscard]] RirSet simulate_rir(const SceneGeometry& scene, const RirOptions& options = {});

/// First index with |h| > max|h| / 10 per channel, minimum over channels.
/// Throws DataError if every channel is all-zero.
[[nodiscard]] std::size_t detect_rir_start(std::span<const Signal> channels);

/// Fills h_early / h_late / early_end from h and start_sample.
void split_early_late(RirSet& rirs, double early_window_s = 0.050);

}  // namespace mixlab
