#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "mixlab/signal.hpp"

namespace mixlab {

struct StftConfig {
  std::size_t size = 512;
  std::size_t dft_size = 512;
  std::size_t shift = 128;
  double sample_rate = 8000.0;

  [[nodiscard]] std::size_t num_bins() const { return dft_size / 2 + 1; }
  /// Zeros added at both ends of the signal before framing.
  [[nodiscard]] std::size_t padding() const { return size - shift; }
};

/// Throws std::invalid_argument unless shift divides size, size <= dft_size
/// and the Hann window satisfies the overlap-add condition at this shift.
void validate(const StftConfig& config);

/// Complex STFT values indexed (channel, frame, bin), bins contiguous.
class TfTensor {
 public:
  TfTensor() = default;
  TfTensor(std::size_t channels, std::size_t frames, std::size_t bins, std::size_t signal_length = 0);

  [[nodiscard]] std::size_t channels() const { return channels_; }
  [[nodiscard]] std::size_t frames() const { return frames_; }
  [[nodiscard]] std::size_t bins() const { return bins_; }
  /// Length of the time-domain signal the tensor was computed from.
  [[nodiscard]] std::size_t signal_length() const { return signal_length_; }

  std::complex<double>& operator()(std::size_t channel, std::size_t frame, std::size_t bin) {
    return data_[(channel * frames_ + frame) * bins_ + bin];
  }
  const std::complex<double>& operator()(std::size_t channel, std::size_t frame, std::size_t bin) const {
    return data_[(channel * frames_ + frame) * bins_ + bin];
  }

  [[nodiscard]] std::span<std::complex<double>> spectrum(std::size_t channel, std::size_t frame) {
    return {data_.data() + (channel * frames_ + frame) * bins_, bins_};
  }
  [[nodiscard]] std::span<const std::complex<double>> spectrum(std::size_t channel, std::size_t frame) const {
    return {data_.data() + (channel * frames_ + frame) * bins_, bins_};
  }

  [[nodiscard]] std::span<std::complex<double>> data() { return data_; }
  [[nodiscard]] std::span<const std::complex<double>> data() const { return data_; }

  /// Same shape as `other`.
  [[nodiscard]] bool same_shape(const TfTensor& other) const;
  /// One channel as a single-channel tensor.
  [[nodiscard]] TfTensor channel(std::size_t index) const;

  TfTensor& operator+=(const TfTensor& other);

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t signal_length_ = 0;
  std::vector<std::complex<double>> data_;
};

[[nodiscard]] TfTensor operator+(TfTensor a, const TfTensor& b);

/// Periodic Hann window.
[[nodiscard]] std::vector<double> hann_window(std::size_t size);

/// Least-squares dual of the Hann analysis window for the given shift.
[[nodiscard]] std::vector<double> synthesis_window(const StftConfig& config);

[[nodiscard]] std::size_t num_frames(std::size_t signal_length, const StftConfig& config);

/// One-sided STFT of every channel. The signal is zero-padded by
/// size - shift samples at both ends (and at the tail up to a whole frame),
/// so every sample is covered by size / shift frames.
[[nodiscard]] TfTensor analyze(const MultiSignal& signal, const StftConfig& config = {});

/// Inverse of analyze(): overlap-add with the dual window, cropped back to
/// tf.signal_length().
[[nodiscard]] MultiSignal synthesize(const TfTensor& tf, const StftConfig& config = {});

/// Sum of |X|^2 over the full (two-sided) spectrum, i.e. one-sided bins other
/// than DC and Nyquist are counted twice.
[[nodiscard]] double spectral_energy(const TfTensor& tf);

/// Factor relating spectral_energy() to time-domain energy for a fully
/// covered signal: dft_size * sum over hops of w^2.
[[nodiscard]] double parseval_factor(const StftConfig& config);

}  // namespace mixlab
