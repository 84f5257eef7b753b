#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mixlab {

/// Real-to-complex DFT of fixed length backed by FFTW.
///
/// Plans are created with FFTW_ESTIMATE on buffers owned by the object, so
/// results are bit-reproducible run to run. Execution is reentrant across
/// distinct objects; a single object must not be shared between threads.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t num_bins() const { return size_ / 2 + 1; }

  /// `in` may be shorter than size(); it is zero-extended.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Unnormalized inverse: forward followed by inverse scales by size().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  void release();

  std::size_t size_ = 0;
  double* real_ = nullptr;
  std::complex<double>* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Smallest 2^a 3^b 5^c that is >= n.
[[nodiscard]] std::size_t good_fft_size(std::size_t n);

/// Full linear convolution, length a.size() + b.size() - 1.
[[nodiscard]] std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

/// Linear convolution of one signal with many filters, sharing the signal's
/// transform. Each output is cropped to [offset, offset + length).
[[nodiscard]] std::vector<std::vector<double>> fft_convolve_many(
    std::span<const double> signal, std::span<const std::vector<double>> filters,
    std::size_t offset, std::size_t length);

}  // namespace mixlab
