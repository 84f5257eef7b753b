#include "mixlab/beamformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixlab/error.hpp"

namespace mixlab {

namespace {

void check_masks(const TfTensor& tf, const MaskSet& masks) {
  if (masks.frames() != tf.frames() || masks.bins() != tf.bins()) {
    throw DataError("mask shape does not match the STFT");
  }
}

}  // namespace

SpatialCovariances estimate_covariances(const TfTensor& observation, const MaskSet& masks, std::size_t target,
                                        double mask_floor) {
  check_masks(observation, masks);
  if (target >= masks.classes()) throw DataError("estimate_covariances: target class out of range");
  const auto D = static_cast<Eigen::Index>(observation.channels());
  const std::size_t T = observation.frames();
  const std::size_t F = observation.bins();

  SpatialCovariances out;
  out.phi_x.assign(F, Eigen::MatrixXcd::Zero(D, D));
  out.phi_n.assign(F, Eigen::MatrixXcd::Zero(D, D));
  Eigen::MatrixXcd yx(D, static_cast<Eigen::Index>(T));
  Eigen::MatrixXcd yn(D, static_cast<Eigen::Index>(T));
  for (std::size_t f = 0; f < F; ++f) {
    double target_mass = 0.0;
    double other_mass = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double mask_x = std::max(masks(target, t, f), mask_floor);
      double mask_n = 0.0;
      for (std::size_t k = 0; k < masks.classes(); ++k) {
        if (k != target) mask_n += masks(k, t, f);
      }
      mask_n = std::max(mask_n, mask_floor);
      const auto ti = static_cast<Eigen::Index>(t);
      for (Eigen::Index d = 0; d < D; ++d) {
        const auto y = observation(static_cast<std::size_t>(d), t, f);
        yx(d, ti) = std::sqrt(mask_x) * y;
        yn(d, ti) = std::sqrt(mask_n) * y;
      }
      target_mass += mask_x;
      other_mass += mask_n;
    }
    out.phi_x[f] = yx * yx.adjoint();
    out.phi_n[f] = yn * yn.adjoint();
    if (!(target_mass > 0.0) || !(other_mass > 0.0)) {
      throw DataError("estimate_covariances: zero mask mass at bin " + std::to_string(f));
    }
    out.phi_x[f] /= target_mass;
    out.phi_n[f] /= other_mass;
    out.phi_x[f] = 0.5 * (out.phi_x[f] + out.phi_x[f].adjoint()).eval();
    out.phi_n[f] = 0.5 * (out.phi_n[f] + out.phi_n[f].adjoint()).eval();
  }
  return out;
}

Eigen::VectorXcd mvdr_souden(const Eigen::MatrixXcd& phi_x, const Eigen::MatrixXcd& phi_n, std::size_t reference,
                             double loading) {
  const Eigen::Index D = phi_x.rows();
  if (phi_x.cols() != D || phi_n.rows() != D || phi_n.cols() != D) {
    throw DataError("mvdr_souden: covariance shapes differ");
  }
  if (reference >= static_cast<std::size_t>(D)) throw DataError("mvdr_souden: reference channel out of range");
  Eigen::MatrixXcd loaded = phi_n;
  loaded.diagonal().array() += loading * phi_n.trace().real() / static_cast<double>(D);
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(loaded);
  if (ldlt.info() != Eigen::Success) throw NumericalError("mvdr_souden: distortion covariance not invertible");
  const Eigen::MatrixXcd numerator = ldlt.solve(phi_x);
  const std::complex<double> trace = numerator.trace();
  if (!(std::abs(trace) > std::numeric_limits<double>::min()) || !std::isfinite(std::abs(trace))) {
    throw NumericalError("mvdr_souden: degenerate target covariance");
  }
  return numerator.col(static_cast<Eigen::Index>(reference)) / trace;
}

std::vector<Eigen::VectorXcd> mvdr_souden(const SpatialCovariances& covariances, std::size_t reference,
                                          double loading) {
  std::vector<Eigen::VectorXcd> weights;
  weights.reserve(covariances.phi_x.size());
  for (std::size_t f = 0; f < covariances.phi_x.size(); ++f) {
    try {
      weights.push_back(mvdr_souden(covariances.phi_x[f], covariances.phi_n[f], reference, loading));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at bin " + std::to_string(f));
    }
  }
  return weights;
}

double expected_output_snr(const SpatialCovariances& covariances, const std::vector<Eigen::VectorXcd>& weights) {
  double target = 0.0;
  double distortion = 0.0;
  for (std::size_t f = 0; f < weights.size(); ++f) {
    const auto& w = weights[f];
    target += (w.adjoint() * covariances.phi_x[f] * w).value().real();
    distortion += (w.adjoint() * covariances.phi_n[f] * w).value().real();
  }
  if (!(distortion > 0.0)) return std::numeric_limits<double>::infinity();
  return target / distortion;
}

std::size_t select_reference(const SpatialCovariances& covariances,
                             const std::vector<std::vector<Eigen::VectorXcd>>& candidates) {
  std::size_t best = 0;
  double best_snr = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const double snr = expected_output_snr(covariances, candidates[r]);
    if (snr > best_snr) {
      best_snr = snr;
      best = r;
    }
  }
  return best;
}

BeamformerSolution mvdr_with_reference_selection(const SpatialCovariances& covariances, double loading) {
  if (covariances.phi_x.empty()) throw DataError("mvdr: no frequency bins");
  const auto D = static_cast<std::size_t>(covariances.phi_x.front().rows());
  std::vector<std::vector<Eigen::VectorXcd>> candidates;
  candidates.reserve(D);
  for (std::size_t r = 0; r < D; ++r) candidates.push_back(mvdr_souden(covariances, r, loading));
  BeamformerSolution solution;
  solution.reference = select_reference(covariances, candidates);
  solution.weights = std::move(candidates[solution.reference]);
  return solution;
}

BeamformerOp::BeamformerOp(std::vector<Eigen::VectorXcd> weights) : weights_(std::move(weights)) {}

TfTensor BeamformerOp::apply(const TfTensor& tf) const {
  if (tf.bins() != weights_.size()) throw DataError("BeamformerOp: bin count mismatch");
  TfTensor out(1, tf.frames(), tf.bins(), tf.signal_length());
  for (std::size_t f = 0; f < tf.bins(); ++f) {
    const auto& w = weights_[f];
    if (static_cast<std::size_t>(w.size()) != tf.channels()) throw DataError("BeamformerOp: channel count mismatch");
    for (std::size_t t = 0; t < tf.frames(); ++t) {
      std::complex<double> sum{};
      for (std::size_t d = 0; d < tf.channels(); ++d) sum += std::conj(w(static_cast<Eigen::Index>(d))) * tf(d, t, f);
      out(0, t, f) = sum;
    }
  }
  return out;
}

MaskOp::MaskOp(std::vector<double> mask, std::size_t frames, std::size_t bins, std::size_t reference)
    : mask_(std::move(mask)), frames_(frames), bins_(bins), reference_(reference) {
  if (mask_.size() != frames * bins) throw DataError("MaskOp: mask size does not match frames x bins");
}

MaskOp::MaskOp(std::size_t reference) : reference_(reference) {}

TfTensor MaskOp::apply(const TfTensor& tf) const {
  if (reference_ >= tf.channels()) throw DataError("MaskOp: reference channel out of range");
  if (!mask_.empty() && (tf.frames() != frames_ || tf.bins() != bins_)) throw DataError("MaskOp: shape mismatch");
  TfTensor out(1, tf.frames(), tf.bins(), tf.signal_length());
  for (std::size_t t = 0; t < tf.frames(); ++t) {
    for (std::size_t f = 0; f < tf.bins(); ++f) {
      const double gain = mask_.empty() ? 1.0 : mask_[t * bins_ + f];
      out(0, t, f) = gain * tf(reference_, t, f);
    }
  }
  return out;
}

std::vector<double> class_mask(const MaskSet& masks, std::size_t k) {
  if (k >= masks.classes()) throw DataError("class_mask: class out of range");
  std::vector<double> out(masks.frames() * masks.bins());
  for (std::size_t t = 0; t < masks.frames(); ++t) {
    for (std::size_t f = 0; f < masks.bins(); ++f) out[t * masks.bins() + f] = masks(k, t, f);
  }
  return out;
}

MaskSet oracle_masks(const std::vector<TfTensor>& images, const TfTensor& noise, OracleMask kind,
                     std::size_t reference, double exponent) {
  if (images.empty()) throw DataError("oracle_masks: no images");
  for (const auto& image : images) {
    if (!image.same_shape(noise)) throw DataError("oracle_masks: image and noise shapes differ");
  }
  if (reference >= noise.channels()) throw DataError("oracle_masks: reference channel out of range");
  const std::size_t K = images.size() + 1;
  const std::size_t T = noise.frames();
  const std::size_t F = noise.bins();
  MaskSet masks(K, T, F);
  std::vector<double> magnitude(K);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t k = 0; k + 1 < K; ++k) magnitude[k] = std::abs(images[k](reference, t, f));
      magnitude[K - 1] = std::abs(noise(reference, t, f));
      if (kind == OracleMask::kIbm) {
        const auto loudest = static_cast<std::size_t>(std::max_element(magnitude.begin(), magnitude.end()) -
                                                      magnitude.begin());
        for (std::size_t k = 0; k < K; ++k) masks(k, t, f) = k == loudest ? 1.0 : 0.0;
        continue;
      }
      double total = 0.0;
      for (auto& m : magnitude) total += (m = std::pow(m, exponent));
      for (std::size_t k = 0; k < K; ++k) {
        masks(k, t, f) = total > 0.0 ? magnitude[k] / total : 1.0 / static_cast<double>(K);
      }
    }
  }
  return masks;
}

}  // namespace mixlab
