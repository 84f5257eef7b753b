#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mixlab/beamformer.hpp"
#include "mixlab/mixer.hpp"
#include "mixlab/stft.hpp"

namespace mixlab {

/// 10 log10(|s|^2 / |s - est|^2). +inf when est == ref.
[[nodiscard]] double sdr(std::span<const double> ref, std::span<const double> est);

/// Scale-invariant SDR with the reference scaled by <s, est> / <s, s>.
/// -inf when est is orthogonal to ref (including est == 0), +inf for a
/// scaled copy of ref.
[[nodiscard]] double si_sdr(std::span<const double> ref, std::span<const double> est);

/// SDR after projecting est onto ref filtered by the best FIR of length
/// tau_max (least squares, Toeplitz normal equations).
[[nodiscard]] double bss_eval_sdr(std::span<const double> ref, std::span<const double> est,
                                  std::size_t tau_max = 512);

/// Invasive SDR for one operator and target: the operator is applied to each
/// component separately and energies are compared in the STFT domain.
/// +inf when the distortion energy is zero.
[[nodiscard]] double invasive_sdr(const LinearOperator& op, const std::vector<TfTensor>& images, const TfTensor& noise,
                                  std::size_t target);

/// Assignment maximizing the summed score: result[i] is the column matched
/// with row i. Brute force for up to three rows, Hungarian beyond; ties go to
/// the lexicographically first assignment. Infinite scores are clamped.
/// Throws DataError on NaN or a non-square matrix.
[[nodiscard]] std::vector<std::size_t> resolve_permutation(const Eigen::MatrixXd& score);

enum class ReferenceKind { kSource, kEarly, kImage, kNoisy };

[[nodiscard]] std::string_view to_string(ReferenceKind kind);
/// Accepts source, early, image and noisy. Throws std::invalid_argument.
[[nodiscard]] ReferenceKind parse_reference_kind(std::string_view name);

/// Reference signals of every speaker for a given kind at channel `mic`.
[[nodiscard]] MultiSignal reference_signals(const MixtureBundle& bundle, ReferenceKind kind, std::size_t mic = 0);

struct MetricRow {
  std::size_t speaker = 0;
  std::size_t estimate = 0;
  double sdr = 0.0;
  double si_sdr = 0.0;
  double bss_eval_sdr = 0.0;
  std::optional<double> invasive_sdr;
};

struct BundleEvaluation {
  ReferenceKind reference = ReferenceKind::kSource;
  /// permutation[k] is the estimate assigned to speaker k.
  std::vector<std::size_t> permutation;
  std::vector<MetricRow> rows;
};

struct EvaluationOptions {
  ReferenceKind reference = ReferenceKind::kSource;
  std::size_t reference_mic = 0;
  std::size_t tau_max = 512;
  StftConfig stft;
};

/// Metrics for one scene under the permutation with the highest mean
/// BSS-Eval SDR. With `operators` (one per estimate), invasive SDR is added:
/// operator j is applied to the STFT of every full speech image and of the
/// noise.
[[nodiscard]] BundleEvaluation evaluate_bundle(const MixtureBundle& bundle, const MultiSignal& estimates,
                                               const EvaluationOptions& options = {},
                                               const std::vector<const LinearOperator*>* operators = nullptr);

struct MetricSummary {
  double mean = 0.0;
  std::size_t count = 0;
  std::size_t nonfinite = 0;
};

/// Mean over finite values; non-finite values are counted, not averaged.
[[nodiscard]] MetricSummary summarize(std::span<const double> values);

}  // namespace mixlab
