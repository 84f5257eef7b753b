#include "mixlab/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mixlab/error.hpp"
#include "mixlab/fft.hpp"

namespace mixlab {

namespace {

// Sum of w^2 over all frames covering sample position n of a frame.
std::vector<double> squared_window_overlap(const std::vector<double>& window, std::size_t shift) {
  std::vector<double> overlap(window.size(), 0.0);
  for (std::size_t n = 0; n < window.size(); ++n) {
    for (std::size_t j = n % shift; j < window.size(); j += shift) overlap[n] += window[j] * window[j];
  }
  return overlap;
}

}  // namespace

void validate(const StftConfig& config) {
  if (config.size == 0 || config.shift == 0) throw std::invalid_argument("StftConfig: zero size or shift");
  if (config.size % config.shift != 0) throw std::invalid_argument("StftConfig: shift must divide size");
  if (config.dft_size < config.size) throw std::invalid_argument("StftConfig: dft_size < size");
  // Periodic Hann overlap-adds to a constant for hops of size/2, size/4, ...
  const std::size_t hops = config.size / config.shift;
  if (hops < 2) throw std::invalid_argument("StftConfig: Hann window needs at least 50% overlap");
}

TfTensor::TfTensor(std::size_t channels, std::size_t frames, std::size_t bins, std::size_t signal_length)
    : channels_(channels),
      frames_(frames),
      bins_(bins),
      signal_length_(signal_length),
      data_(channels * frames * bins) {}

bool TfTensor::same_shape(const TfTensor& other) const {
  return channels_ == other.channels_ && frames_ == other.frames_ && bins_ == other.bins_;
}

TfTensor TfTensor::channel(std::size_t index) const {
  if (index >= channels_) throw DataError("TfTensor::channel: index out of range");
  TfTensor out(1, frames_, bins_, signal_length_);
  const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(index * frames_ * bins_);
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(frames_ * bins_), out.data_.begin());
  return out;
}

TfTensor& TfTensor::operator+=(const TfTensor& other) {
  if (!same_shape(other)) throw DataError("TfTensor: shape mismatch in addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

TfTensor operator+(TfTensor a, const TfTensor& b) {
  a += b;
  return a;
}

std::vector<double> hann_window(std::size_t size) {
  std::vector<double> window(size);
  for (std::size_t n = 0; n < size; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(size));
  }
  return window;
}

std::vector<double> synthesis_window(const StftConfig& config) {
  const auto window = hann_window(config.size);
  const auto overlap = squared_window_overlap(window, config.shift);
  std::vector<double> dual(config.size);
  for (std::size_t n = 0; n < config.size; ++n) dual[n] = window[n] / overlap[n];
  return dual;
}

std::size_t num_frames(std::size_t signal_length, const StftConfig& config) {
  const std::size_t padded = signal_length + 2 * config.padding();
  return (padded - config.size + config.shift - 1) / config.shift + 1;
}

TfTensor analyze(const MultiSignal& signal, const StftConfig& config) {
  validate(config);
  if (signal.empty()) throw DataError("analyze: no channels");
  const std::size_t length = signal.front().size();
  for (const auto& channel : signal) {
    if (channel.size() != length) throw DataError("analyze: channels differ in length");
  }
  if (length < config.size) throw DataError("analyze: signal shorter than the window");

  const std::size_t frames = num_frames(length, config);
  const std::size_t pad = config.padding();
  const auto window = hann_window(config.size);
  TfTensor tf(signal.size(), frames, config.num_bins(), length);
  RealFft fft(config.dft_size);
  std::vector<double> frame(config.size);
  for (std::size_t d = 0; d < signal.size(); ++d) {
    for (std::size_t t = 0; t < frames; ++t) {
      // Padded index p maps to signal index p - pad.
      for (std::size_t n = 0; n < config.size; ++n) {
        const std::size_t p = t * config.shift + n;
        frame[n] = (p >= pad && p - pad < length) ? window[n] * signal[d][p - pad] : 0.0;
      }
      fft.forward(frame, tf.spectrum(d, t));
    }
  }
  return tf;
}

MultiSignal synthesize(const TfTensor& tf, const StftConfig& config) {
  validate(config);
  if (tf.bins() != config.num_bins()) throw DataError("synthesize: bin count does not match config");
  const std::size_t length = tf.signal_length();
  if (length == 0 || num_frames(length, config) != tf.frames()) {
    throw DataError("synthesize: frame count does not match signal length");
  }
  const std::size_t pad = config.padding();
  const auto dual = synthesis_window(config);
  const double scale = 1.0 / static_cast<double>(config.dft_size);
  RealFft fft(config.dft_size);
  std::vector<double> frame(config.dft_size);
  MultiSignal out(tf.channels(), Signal(length, 0.0));
  for (std::size_t d = 0; d < tf.channels(); ++d) {
    for (std::size_t t = 0; t < tf.frames(); ++t) {
      fft.inverse(tf.spectrum(d, t), frame);
      for (std::size_t n = 0; n < config.size; ++n) {
        const std::size_t p = t * config.shift + n;
        if (p >= pad && p - pad < length) out[d][p - pad] += dual[n] * frame[n] * scale;
      }
    }
  }
  return out;
}

double spectral_energy(const TfTensor& tf) {
  double energy = 0.0;
  const bool even_dft = true;
  for (std::size_t d = 0; d < tf.channels(); ++d) {
    for (std::size_t t = 0; t < tf.frames(); ++t) {
      const auto spectrum = tf.spectrum(d, t);
      for (std::size_t f = 0; f < spectrum.size(); ++f) {
        const bool edge = f == 0 || (even_dft && f + 1 == spectrum.size());
        energy += (edge ? 1.0 : 2.0) * std::norm(spectrum[f]);
      }
    }
  }
  return energy;
}

double parseval_factor(const StftConfig& config) {
  const auto window = hann_window(config.size);
  double sum = 0.0;
  for (const double w : window) sum += w * w;
  return static_cast<double>(config.dft_size) * sum / static_cast<double>(config.shift);
}

}  // namespace mixlab
