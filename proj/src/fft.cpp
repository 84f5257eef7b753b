#include "mixlab/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <new>
#include <stdexcept>
#include <utility>

namespace mixlab {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size == 0) throw std::invalid_argument("RealFft: size must be positive");
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * size_));
  spectrum_ = static_cast<std::complex<double>*>(
      fftw_malloc(sizeof(std::complex<double>) * num_bins()));
  if (real_ == nullptr || spectrum_ == nullptr) {
    release();
    throw std::bad_alloc();
  }
  auto* spectrum = reinterpret_cast<fftw_complex*>(spectrum_);
  const int n = static_cast<int>(size_);
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real_, spectrum, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, spectrum, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : size_(std::exchange(other.size_, 0)),
      real_(std::exchange(other.real_, nullptr)),
      spectrum_(std::exchange(other.spectrum_, nullptr)),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    size_ = std::exchange(other.size_, 0);
    real_ = std::exchange(other.real_, nullptr);
    spectrum_ = std::exchange(other.spectrum_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void RealFft::release() {
  {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    if (inverse_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  }
  forward_plan_ = inverse_plan_ = nullptr;
  if (real_ != nullptr) fftw_free(real_);
  if (spectrum_ != nullptr) fftw_free(spectrum_);
  real_ = nullptr;
  spectrum_ = nullptr;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() > size_ || out.size() != num_bins()) {
    throw std::invalid_argument("RealFft::forward: size mismatch");
  }
  std::copy(in.begin(), in.end(), real_);
  std::fill(real_ + in.size(), real_ + size_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::copy(spectrum_, spectrum_ + num_bins(), out.begin());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() != num_bins() || out.size() != size_) {
    throw std::invalid_argument("RealFft::inverse: size mismatch");
  }
  std::copy(in.begin(), in.end(), spectrum_);
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  std::copy(real_, real_ + size_, out.begin());
}

std::size_t good_fft_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t candidate = n;; ++candidate) {
    std::size_t rest = candidate;
    for (const std::size_t factor : {2u, 3u, 5u}) {
      while (rest % factor == 0) rest /= factor;
    }
    if (rest == 1) return candidate;
  }
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t full = a.size() + b.size() - 1;
  auto result = fft_convolve_many(a, std::vector<std::vector<double>>{{b.begin(), b.end()}}, 0, full);
  return std::move(result.front());
}

std::vector<std::vector<double>> fft_convolve_many(std::span<const double> signal,
                                                   std::span<const std::vector<double>> filters,
                                                   std::size_t offset, std::size_t length) {
  std::size_t longest = 0;
  for (const auto& f : filters) longest = std::max(longest, f.size());
  std::vector<std::vector<double>> outputs(filters.size(), std::vector<double>(length, 0.0));
  if (signal.empty() || longest == 0) return outputs;

  const std::size_t full = signal.size() + longest - 1;
  RealFft fft(good_fft_size(full));
  const double scale = 1.0 / static_cast<double>(fft.size());
  std::vector<std::complex<double>> signal_spectrum(fft.num_bins());
  std::vector<std::complex<double>> filter_spectrum(fft.num_bins());
  std::vector<double> time(fft.size());
  fft.forward(signal, signal_spectrum);

  for (std::size_t i = 0; i < filters.size(); ++i) {
    if (filters[i].empty()) continue;
    fft.forward(filters[i], filter_spectrum);
    for (std::size_t b = 0; b < filter_spectrum.size(); ++b) filter_spectrum[b] *= signal_spectrum[b];
    fft.inverse(filter_spectrum, time);
    const std::size_t valid = signal.size() + filters[i].size() - 1;
    for (std::size_t n = 0; n < length && offset + n < valid; ++n) {
      outputs[i][n] = time[offset + n] * scale;
    }
  }
  return outputs;
}

}  // namespace mixlab
