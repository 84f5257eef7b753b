#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixlab/cacgmm.hpp"
#include "mixlab/stft.hpp"

namespace mixlab {

struct SpatialCovariances {
  std::vector<Eigen::MatrixXcd> phi_x;  // [f], target
  std::vector<Eigen::MatrixXcd> phi_n;  // [f], interferers and noise
};

/// Mask-weighted spatial covariances for class `target`. The distortion mask
/// is the sum of all other classes, noise included. Masks are floored at
/// `mask_floor` so that no bin has zero total weight.
[[nodiscard]] SpatialCovariances estimate_covariances(const TfTensor& observation, const MaskSet& masks,
                                                      std::size_t target, double mask_floor = 1e-10);

/// Souden MVDR: (phi_n^-1 phi_x / trace(phi_n^-1 phi_x)) u_ref. phi_n is
/// loaded with loading * trace(phi_n) / D on the diagonal before solving.
/// Throws NumericalError when the trace vanishes.
[[nodiscard]] Eigen::VectorXcd mvdr_souden(const Eigen::MatrixXcd& phi_x, const Eigen::MatrixXcd& phi_n,
                                           std::size_t reference, double loading = 1e-8);

/// Weights for every bin and one reference channel.
[[nodiscard]] std::vector<Eigen::VectorXcd> mvdr_souden(const SpatialCovariances& covariances,
                                                        std::size_t reference, double loading = 1e-8);

/// Expected output SNR sum_f w^H phi_x w / sum_f w^H phi_n w.
[[nodiscard]] double expected_output_snr(const SpatialCovariances& covariances,
                                         const std::vector<Eigen::VectorXcd>& weights);

/// Index of the candidate with the largest expected output SNR; ties go to
/// the lowest index. candidates[r] are the weights for reference r.
[[nodiscard]] std::size_t select_reference(const SpatialCovariances& covariances,
                                           const std::vector<std::vector<Eigen::VectorXcd>>& candidates);

struct BeamformerSolution {
  std::vector<Eigen::VectorXcd> weights;  // [f]
  std::size_t reference = 0;
};

/// MVDR weights with the reference channel chosen by expected output SNR.
[[nodiscard]] BeamformerSolution mvdr_with_reference_selection(const SpatialCovariances& covariances,
                                                               double loading = 1e-8);

/// A linear map from a multi-channel STFT to a single-channel STFT. The same
/// operator applied to each additive component of an observation yields the
/// components of its output.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  [[nodiscard]] virtual TfTensor apply(const TfTensor& tf) const = 0;
};

/// s(t, f) = w_f^H y(t, f).
class BeamformerOp final : public LinearOperator {
 public:
  explicit BeamformerOp(std::vector<Eigen::VectorXcd> weights);
  [[nodiscard]] TfTensor apply(const TfTensor& tf) const override;
  [[nodiscard]] const std::vector<Eigen::VectorXcd>& weights() const { return weights_; }

 private:
  std::vector<Eigen::VectorXcd> weights_;
};

/// s(t, f) = mask(t, f) y_ref(t, f). An empty mask selects the channel.
class MaskOp final : public LinearOperator {
 public:
  /// mask is (frames x bins), row-major by frame.
  MaskOp(std::vector<double> mask, std::size_t frames, std::size_t bins, std::size_t reference);
  /// Plain channel selection.
  explicit MaskOp(std::size_t reference);
  [[nodiscard]] TfTensor apply(const TfTensor& tf) const override;
  [[nodiscard]] std::size_t reference() const { return reference_; }
  [[nodiscard]] const std::vector<double>& mask() const { return mask_; }

 private:
  std::vector<double> mask_;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t reference_ = 0;
};

/// Mask of class k as (frames x bins), for MaskOp.
[[nodiscard]] std::vector<double> class_mask(const MaskSet& masks, std::size_t k);

enum class OracleMask { kIrm, kIbm };

/// Oracle masks from per-speaker images and noise at channel `reference`.
/// IRM_k = |X_k|^p / (sum_j |X_j|^p + |N|^p); IBM_k is one for the loudest
/// class (lowest index on ties). Bins where every magnitude is zero get a
/// uniform mask. The last class is noise.
[[nodiscard]] MaskSet oracle_masks(const std::vector<TfTensor>& images, const TfTensor& noise, OracleMask kind,
                                   std::size_t reference = 0, double exponent = 1.0);

}  // namespace mixlab
