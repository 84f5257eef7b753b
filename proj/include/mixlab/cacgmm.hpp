#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mixlab/stft.hpp"

namespace mixlab {

/// Class posteriors gamma(k, t, f). The last class is noise when the set has
/// num_speakers + 1 classes.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(std::size_t classes, std::size_t frames, std::size_t bins);

  [[nodiscard]] std::size_t classes() const { return classes_; }
  [[nodiscard]] std::size_t frames() const { return frames_; }
  [[nodiscard]] std::size_t bins() const { return bins_; }
  [[nodiscard]] std::size_t noise_class() const { return classes_ - 1; }

  double& operator()(std::size_t k, std::size_t t, std::size_t f) { return data_[(k * frames_ + t) * bins_ + f]; }
  double operator()(std::size_t k, std::size_t t, std::size_t f) const {
    return data_[(k * frames_ + t) * bins_ + f];
  }

  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }

  /// Largest |sum_k gamma(k, t, f) - 1| over all (t, f).
  [[nodiscard]] double simplex_error() const;

  /// Alignment permutation applied at each bin: class k of the output was
  /// class permutation[f][k] of the raw model.
  std::vector<std::vector<std::size_t>> permutation;

 private:
  std::size_t classes_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<double> data_;
};

struct CacgmmParams {
  /// shape[k][f], D x D Hermitian positive definite.
  std::vector<std::vector<Eigen::MatrixXcd>> shape;
  /// weight(k, t), columns sum to one.
  Eigen::MatrixXd weight;
};

struct CacgmmOptions {
  std::size_t iterations = 100;
  std::uint64_t seed = 0;
  bool align = true;
  /// Alignment runs in every iteration whose zero-based index is >= this.
  std::size_t align_from_iteration = 2;
  double regularization = 1e-10;
  /// Reorder classes after fitting so that the one with the flattest shape
  /// matrices is last (the noise class).
  bool noise_last = true;
  /// Called after every E-step with posteriors gamma[f](k, t).
  std::function<void(std::size_t iteration, std::span<const Eigen::MatrixXd> gamma)> observer;
};

struct CacgmmResult {
  MaskSet masks;
  CacgmmParams params;
  /// Log-likelihood of the parameters estimated in each iteration.
  std::vector<double> log_likelihood;
};

/// Independent Dirichlet(1, ..., 1) draws for every (t, f).
[[nodiscard]] MaskSet init_posteriors(std::size_t frames, std::size_t bins, std::size_t classes,
                                      std::uint64_t seed);

/// EM for a mixture of complex angular central Gaussians with time-varying
/// weights, `num_speakers` + 1 classes. Throws DataError on NaN input or
/// fewer than two channels, NumericalError when a shape matrix stays
/// singular (the message names the bin).
[[nodiscard]] CacgmmResult fit_cacgmm(const TfTensor& observation, std::size_t num_speakers,
                                      const CacgmmOptions& options = {});

struct AlignmentResult {
  /// permutation[f][k]: input class placed at output class k.
  std::vector<std::vector<std::size_t>> permutation;
  std::size_t changed_bins = 0;
};

/// Aligns class labels across frequencies in place. gamma[f] is (classes x
/// frames). Each bin takes the permutation maximizing the summed Pearson
/// correlation of its class profiles with the centroid profiles, visiting
/// bins from low to high; centroids are re-estimated after each pass until a
/// pass changes nothing. Ties resolve to the lexicographically first
/// permutation.
AlignmentResult align_permutations(std::span<Eigen::MatrixXd> gamma, std::size_t max_passes = 20);

/// MaskSet overload; records the permutations in masks.permutation.
AlignmentResult align_permutations(MaskSet& masks, std::size_t max_passes = 20);

/// Log-density of the complex angular central Gaussian on the unit sphere
/// in C^D for a unit vector z.
[[nodiscard]] double cacg_log_density(const Eigen::VectorXcd& z, const Eigen::MatrixXcd& shape);

}  // namespace mixlab
