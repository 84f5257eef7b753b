#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mixlab/signal.hpp"

namespace mixlab {

struct WavData {
  double sample_rate = 0.0;
  MultiSignal channels;  // [channel][sample]
};

/// Writes IEEE float32 WAV. Channels must have equal length.
void write_wav(const std::filesystem::path& path, const MultiSignal& channels, double sample_rate);

/// Reads PCM 16/24/32-bit integer or float32/float64 WAV (incl.
/// WAVE_FORMAT_EXTENSIBLE). Integer samples are scaled to [-1, 1).
[[nodiscard]] WavData read_wav(const std::filesystem::path& path);

/// Band-limited resampling with a Hann-windowed sinc kernel.
[[nodiscard]] Signal resample(std::span<const double> signal, double from_rate, double to_rate);

/// NumPy .npy (format 1.0, C order, little endian).
void write_npy(const std::filesystem::path& path, std::span<const float> data, const std::vector<std::size_t>& shape);
void write_npy(const std::filesystem::path& path, std::span<const double> data, const std::vector<std::size_t>& shape);
void write_npy(const std::filesystem::path& path, std::span<const std::complex<double>> data,
               const std::vector<std::size_t>& shape);

template <typename T>
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<T> data;
};

/// Reads arrays written by write_npy (dtype must match exactly).
[[nodiscard]] NpyArray<float> read_npy_float(const std::filesystem::path& path);
[[nodiscard]] NpyArray<double> read_npy_double(const std::filesystem::path& path);
[[nodiscard]] NpyArray<std::complex<double>> read_npy_complex(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never observe a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);

}  // namespace mixlab
