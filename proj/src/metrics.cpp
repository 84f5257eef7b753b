#include "mixlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mixlab/error.hpp"
#include "mixlab/fft.hpp"

namespace mixlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClamp = 1e300;

void check_pair(std::span<const double> ref, std::span<const double> est) {
  if (ref.size() != est.size()) throw DataError("metric: reference and estimate differ in length");
  if (ref.empty()) throw DataError("metric: empty signals");
}

double energy(std::span<const double> x) {
  double sum = 0.0;
  for (const double v : x) sum += v * v;
  return sum;
}

double ratio_db(double signal, double distortion) {
  if (distortion == 0.0) return signal > 0.0 ? kInf : -kInf;
  return 10.0 * std::log10(signal / distortion);
}

double assignment_score(const Eigen::MatrixXd& score, const std::vector<std::size_t>& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    total += score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i]));
  }
  return total;
}

// Minimum-cost assignment (rows to columns) of a square matrix.
std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> min_value(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced =
            cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (reduced < min_value[j]) {
          min_value[j] = reduced;
          way[j] = j0;
        }
        if (min_value[j] < delta) {
          delta = min_value[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_value[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t j = 1; j <= n; ++j) result[match[j] - 1] = j - 1;
  return result;
}

// Best total score of the rows >= `row` over the columns not in `taken`.
double best_remaining(const Eigen::MatrixXd& score, std::size_t row, const std::vector<char>& taken) {
  std::vector<Eigen::Index> columns;
  for (std::size_t j = 0; j < taken.size(); ++j) {
    if (!taken[j]) columns.push_back(static_cast<Eigen::Index>(j));
  }
  const auto m = static_cast<Eigen::Index>(columns.size());
  if (m == 0) return 0.0;
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = score(static_cast<Eigen::Index>(row) + i, columns[j]);
  }
  const Eigen::MatrixXd cost = sub.maxCoeff() - sub.array();
  const auto assignment = hungarian(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) total += sub(i, static_cast<Eigen::Index>(assignment[i]));
  return total;
}

}  // namespace

double sdr(std::span<const double> ref, std::span<const double> est) {
  check_pair(ref, est);
  const double signal = energy(ref);
  if (!(signal > 0.0)) throw DataError("sdr: reference is all zero");
  double error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) error += (ref[i] - est[i]) * (ref[i] - est[i]);
  return ratio_db(signal, error);
}

double si_sdr(std::span<const double> ref, std::span<const double> est) {
  check_pair(ref, est);
  const double ref_energy = energy(ref);
  if (!(ref_energy > 0.0)) throw DataError("si_sdr: reference is all zero");
  const double alpha = std::inner_product(ref.begin(), ref.end(), est.begin(), 0.0) / ref_energy;
  if (alpha == 0.0) return -kInf;
  double target = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double scaled = alpha * ref[i];
    target += scaled * scaled;
    error += (scaled - est[i]) * (scaled - est[i]);
  }
  return ratio_db(target, error);
}

double bss_eval_sdr(std::span<const double> ref, std::span<const double> est, std::size_t tau_max) {
  check_pair(ref, est);
  if (tau_max == 0) throw std::invalid_argument("bss_eval_sdr: tau_max must be positive");
  const std::size_t N = ref.size();
  const std::size_t L = tau_max;
  if (N < L) throw DataError("bss_eval_sdr: signals shorter than the filter length");

  std::vector<double> reversed(ref.rbegin(), ref.rend());
  const auto auto_corr = fft_convolve(ref, reversed);   // lag l at index N - 1 + l
  const auto cross_corr = fft_convolve(reversed, est);  // sum_n ref[n] est[n + l] at N - 1 + l
  const double r0 = auto_corr[N - 1];
  if (!(r0 > 0.0)) throw DataError("bss_eval_sdr: reference is all zero");

  const auto Li = static_cast<Eigen::Index>(L);
  Eigen::MatrixXd toeplitz(Li, Li);
  Eigen::VectorXd rhs(Li);
  for (Eigen::Index i = 0; i < Li; ++i) {
    rhs(i) = cross_corr[N - 1 + static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < Li; ++j) {
      toeplitz(i, j) = auto_corr[N - 1 + static_cast<std::size_t>(std::abs(i - j))];
    }
  }
  toeplitz.diagonal().array() += 1e-12 * r0;
  Eigen::LLT<Eigen::MatrixXd> llt(toeplitz);
  if (llt.info() != Eigen::Success) throw NumericalError("bss_eval_sdr: singular Toeplitz system");
  const Eigen::VectorXd filter = llt.solve(rhs);

  const std::vector<double> taps(filter.data(), filter.data() + filter.size());
  const auto projection = fft_convolve(ref, taps);  // length N + L - 1
  double target = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < projection.size(); ++i) {
    const double e = i < N ? est[i] : 0.0;
    target += projection[i] * projection[i];
    error += (projection[i] - e) * (projection[i] - e);
  }
  return ratio_db(target, error);
}

double invasive_sdr(const LinearOperator& op, const std::vector<TfTensor>& images, const TfTensor& noise,
                    std::size_t target) {
  if (target >= images.size()) throw DataError("invasive_sdr: target out of range");
  const double signal = spectral_energy(op.apply(images[target]));
  double distortion = spectral_energy(op.apply(noise));
  for (std::size_t k = 0; k < images.size(); ++k) {
    if (k != target) distortion += spectral_energy(op.apply(images[k]));
  }
  return ratio_db(signal, distortion);
}

std::vector<std::size_t> resolve_permutation(const Eigen::MatrixXd& input) {
  if (input.rows() != input.cols()) throw DataError("resolve_permutation: score matrix must be square");
  if (input.hasNaN()) throw DataError("resolve_permutation: NaN in score matrix");
  const auto n = static_cast<std::size_t>(input.rows());
  const Eigen::MatrixXd score = input.cwiseMax(-kClamp).cwiseMin(kClamp);

  std::vector<std::size_t> best(n);
  std::iota(best.begin(), best.end(), 0);
  if (n <= 3) {
    auto p = best;
    double best_score = -kInf;
    do {
      const double s = assignment_score(score, p);
      if (s > best_score) {
        best_score = s;
        best = p;
      }
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
  }

  // Fix rows in order, each to the smallest column that keeps the optimum.
  const std::vector<char> none(n, 0);
  const double optimum = best_remaining(score, 0, none);
  const double tolerance = 1e-12 * std::max(1.0, std::abs(optimum));
  std::vector<char> taken(n, 0);
  double fixed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      taken[j] = 1;
      const double value = fixed + score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                           best_remaining(score, i + 1, taken);
      if (value >= optimum - tolerance) {
        best[i] = j;
        fixed += score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        break;
      }
      taken[j] = 0;
    }
  }
  return best;
}

std::string_view to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::kSource: return "source";
    case ReferenceKind::kEarly: return "early";
    case ReferenceKind::kImage: return "image";
    case ReferenceKind::kNoisy: return "noisy";
  }
  return "source";
}

ReferenceKind parse_reference_kind(std::string_view name) {
  if (name == "source") return ReferenceKind::kSource;
  if (name == "early") return ReferenceKind::kEarly;
  if (name == "image") return ReferenceKind::kImage;
  if (name == "noisy") return ReferenceKind::kNoisy;
  throw std::invalid_argument("unknown reference kind '" + std::string(name) + "'");
}

MultiSignal reference_signals(const MixtureBundle& bundle, ReferenceKind kind, std::size_t mic) {
  if (kind != ReferenceKind::kSource && mic >= bundle.num_mics()) {
    throw DataError("reference_signals: reference channel out of range");
  }
  MultiSignal out;
  for (std::size_t k = 0; k < bundle.num_sources(); ++k) {
    switch (kind) {
      case ReferenceKind::kSource: out.push_back(bundle.s[k]); break;
      case ReferenceKind::kEarly: out.push_back(bundle.x_early[k][mic]); break;
      case ReferenceKind::kImage: out.push_back(bundle.x[k][mic]); break;
      case ReferenceKind::kNoisy: {
        Signal noisy = bundle.x[k][mic];
        for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += bundle.n[mic][i];
        out.push_back(std::move(noisy));
        break;
      }
    }
  }
  return out;
}

BundleEvaluation evaluate_bundle(const MixtureBundle& bundle, const MultiSignal& estimates,
                                 const EvaluationOptions& options, const std::vector<const LinearOperator*>* operators) {
  const std::size_t K = bundle.num_sources();
  if (estimates.size() != K) {
    throw DataError("evaluate_bundle: " + std::to_string(estimates.size()) + " estimates for " + std::to_string(K) +
                    " speakers");
  }
  if (operators != nullptr && operators->size() != K) throw DataError("evaluate_bundle: one operator per estimate");
  const MultiSignal references = reference_signals(bundle, options.reference, options.reference_mic);

  const auto Ki = static_cast<Eigen::Index>(K);
  Eigen::MatrixXd bss(Ki, Ki);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < K; ++j) {
      bss(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          bss_eval_sdr(references[k], estimates[j], options.tau_max);
    }
  }

  BundleEvaluation out;
  out.reference = options.reference;
  out.permutation = resolve_permutation(bss);

  std::vector<TfTensor> image_tf;
  TfTensor noise_tf;
  if (operators != nullptr) {
    for (const auto& image : bundle.x) image_tf.push_back(analyze(image, options.stft));
    noise_tf = analyze(bundle.n, options.stft);
  }
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t j = out.permutation[k];
    MetricRow row;
    row.speaker = k;
    row.estimate = j;
    row.sdr = sdr(references[k], estimates[j]);
    row.si_sdr = si_sdr(references[k], estimates[j]);
    row.bss_eval_sdr = bss(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    if (operators != nullptr) row.invasive_sdr = invasive_sdr(*(*operators)[j], image_tf, noise_tf, k);
    out.rows.push_back(row);
  }
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary summary;
  double total = 0.0;
  for (const double v : values) {
    if (std::isfinite(v)) {
      total += v;
      ++summary.count;
    } else {
      ++summary.nonfinite;
    }
  }
  summary.mean = summary.count > 0 ? total / static_cast<double>(summary.count)
                                   : std::numeric_limits<double>::quiet_NaN();
  return summary;
}

}  // namespace mixlab
