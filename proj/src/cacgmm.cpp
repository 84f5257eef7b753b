#include "mixlab/cacgmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "mixlab/error.hpp"
#include "mixlab/random.hpp"

namespace mixlab {

namespace {

using Permutation = std::vector<std::size_t>;

std::vector<Permutation> all_permutations(std::size_t n) {
  std::vector<Permutation> out;
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

double pearson(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const Eigen::RowVectorXd da = a.array() - a.mean();
  const Eigen::RowVectorXd db = b.array() - b.mean();
  const double na = da.squaredNorm();
  const double nb = db.squaredNorm();
  if (!(na > 0.0) || !(nb > 0.0)) return 0.0;
  return da.dot(db) / std::sqrt(na * nb);
}

// Best permutation of the rows of `profiles` against `centroid`; the first
// permutation in lexicographic order wins ties.
const Permutation& best_permutation(const Eigen::MatrixXd& profiles, const Eigen::MatrixXd& centroid,
                                    const std::vector<Permutation>& candidates) {
  const auto K = static_cast<Eigen::Index>(profiles.rows());
  Eigen::MatrixXd corr(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index j = 0; j < K; ++j) corr(i, j) = pearson(profiles.row(i), centroid.row(j));
  }
  const Permutation* best = &candidates.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& p : candidates) {
    double score = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      score += corr(static_cast<Eigen::Index>(p[k]), static_cast<Eigen::Index>(k));
    }
    if (score > best_score) {
      best_score = score;
      best = &p;
    }
  }
  return *best;
}

bool is_identity(const Permutation& p) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] != k) return false;
  }
  return true;
}

template <typename Matrix>
void permute_rows(Matrix& m, const Permutation& p) {
  Matrix copy = m;
  for (std::size_t k = 0; k < p.size(); ++k) {
    m.row(static_cast<Eigen::Index>(k)) = copy.row(static_cast<Eigen::Index>(p[k]));
  }
}

void permute_classes(std::vector<std::vector<Eigen::MatrixXcd>>& shape, std::size_t f, const Permutation& p) {
  std::vector<Eigen::MatrixXcd> copy(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) copy[k] = shape[p[k]][f];
  for (std::size_t k = 0; k < p.size(); ++k) shape[k][f] = std::move(copy[k]);
}

Permutation compose(const Permutation& total, const Permutation& step) {
  Permutation out(step.size());
  for (std::size_t k = 0; k < step.size(); ++k) out[k] = total[step[k]];
  return out;
}

void regularize(Eigen::MatrixXcd& b, double epsilon) {
  b = 0.5 * (b + b.adjoint()).eval();
  const double load = epsilon * b.trace().real() / static_cast<double>(b.rows());
  b.diagonal().array() += load;
}

// Mean over bins of lambda_max / trace of the shape matrices of one class.
double peakiness(const std::vector<Eigen::MatrixXcd>& shapes) {
  double total = 0.0;
  for (const auto& b : shapes) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(b, Eigen::EigenvaluesOnly);
    total += solver.eigenvalues().maxCoeff() / b.trace().real();
  }
  return total / static_cast<double>(shapes.size());
}

}  // namespace

MaskSet::MaskSet(std::size_t classes, std::size_t frames, std::size_t bins)
    : classes_(classes), frames_(frames), bins_(bins), data_(classes * frames * bins, 0.0) {}

double MaskSet::simplex_error() const {
  double worst = 0.0;
  for (std::size_t t = 0; t < frames_; ++t) {
    for (std::size_t f = 0; f < bins_; ++f) {
      double sum = 0.0;
      for (std::size_t k = 0; k < classes_; ++k) sum += (*this)(k, t, f);
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return worst;
}

MaskSet init_posteriors(std::size_t frames, std::size_t bins, std::size_t classes, std::uint64_t seed) {
  if (frames == 0 || bins == 0 || classes == 0) throw std::invalid_argument("init_posteriors: empty dimensions");
  MaskSet masks(classes, frames, bins);
  Rng rng(seed);
  std::vector<double> draw(classes);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < bins; ++f) {
      double sum = 0.0;
      for (auto& v : draw) sum += (v = rng.exponential());
      for (std::size_t k = 0; k < classes; ++k) masks(k, t, f) = draw[k] / sum;
    }
  }
  return masks;
}

double cacg_log_density(const Eigen::VectorXcd& z, const Eigen::MatrixXcd& shape) {
  const auto D = static_cast<double>(z.size());
  Eigen::LLT<Eigen::MatrixXcd> llt(shape);
  if (llt.info() != Eigen::Success) throw NumericalError("cacg_log_density: shape matrix not positive definite");
  const double log_det = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  const double quad = llt.matrixL().solve(z).squaredNorm();
  return std::lgamma(D) - std::log(2.0) - D * std::log(std::numbers::pi) - log_det - D * std::log(quad);
}

AlignmentResult align_permutations(std::span<Eigen::MatrixXd> gamma, std::size_t max_passes) {
  AlignmentResult result;
  if (gamma.empty()) return result;
  const std::size_t K = static_cast<std::size_t>(gamma.front().rows());
  const Eigen::Index T = gamma.front().cols();
  Permutation identity(K);
  std::iota(identity.begin(), identity.end(), 0);
  result.permutation.assign(gamma.size(), identity);
  const auto candidates = all_permutations(K);

  // First pass: each bin is matched to the running sum of the bins below it.
  Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), T);
  for (std::size_t f = 0; f < gamma.size(); ++f) {
    const auto& p = best_permutation(gamma[f], centroid, candidates);
    if (!is_identity(p)) {
      permute_rows(gamma[f], p);
      result.permutation[f] = compose(result.permutation[f], p);
    }
    centroid += gamma[f];
  }

  // Refinement against the global centroid.
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    centroid.setZero();
    for (const auto& g : gamma) centroid += g;
    bool changed = false;
    for (std::size_t f = 0; f < gamma.size(); ++f) {
      const auto& p = best_permutation(gamma[f], centroid, candidates);
      if (is_identity(p)) continue;
      permute_rows(gamma[f], p);
      result.permutation[f] = compose(result.permutation[f], p);
      changed = true;
    }
    if (!changed) break;
  }

  for (const auto& p : result.permutation) {
    if (!is_identity(p)) ++result.changed_bins;
  }
  return result;
}

AlignmentResult align_permutations(MaskSet& masks, std::size_t max_passes) {
  const auto K = static_cast<Eigen::Index>(masks.classes());
  const auto T = static_cast<Eigen::Index>(masks.frames());
  std::vector<Eigen::MatrixXd> gamma(masks.bins(), Eigen::MatrixXd(K, T));
  for (std::size_t f = 0; f < masks.bins(); ++f) {
    for (Eigen::Index k = 0; k < K; ++k) {
      for (Eigen::Index t = 0; t < T; ++t) gamma[f](k, t) = masks(k, t, f);
    }
  }
  auto result = align_permutations(gamma, max_passes);
  for (std::size_t f = 0; f < masks.bins(); ++f) {
    for (Eigen::Index k = 0; k < K; ++k) {
      for (Eigen::Index t = 0; t < T; ++t) masks(k, t, f) = gamma[f](k, t);
    }
  }
  if (masks.permutation.empty()) {
    masks.permutation = result.permutation;
  } else {
    for (std::size_t f = 0; f < masks.bins(); ++f) {
      masks.permutation[f] = compose(masks.permutation[f], result.permutation[f]);
    }
  }
  return result;
}

CacgmmResult fit_cacgmm(const TfTensor& observation, std::size_t num_speakers, const CacgmmOptions& options) {
  const std::size_t D = observation.channels();
  const std::size_t T = observation.frames();
  const std::size_t F = observation.bins();
  const std::size_t K = num_speakers + 1;
  if (D < 2) throw DataError("fit_cacgmm: at least two channels are required");
  if (num_speakers == 0) throw std::invalid_argument("fit_cacgmm: need at least one speaker");
  if (options.iterations == 0) throw std::invalid_argument("fit_cacgmm: iterations must be >= 1");
  if (T == 0 || F == 0) throw DataError("fit_cacgmm: empty observation");
  const auto Di = static_cast<Eigen::Index>(D);
  const auto Ti = static_cast<Eigen::Index>(T);
  const auto Ki = static_cast<Eigen::Index>(K);
  const double Dd = static_cast<double>(D);

  // Observations projected onto the unit sphere; zero vectors are flagged.
  std::vector<Eigen::MatrixXcd> z(F, Eigen::MatrixXcd(Di, Ti));
  std::vector<std::vector<char>> valid(F, std::vector<char>(T, 0));
  bool any_energy = false;
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t) {
      double norm2 = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        const auto v = observation(d, t, f);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
          throw DataError("fit_cacgmm: non-finite value at bin " + std::to_string(f));
        }
        norm2 += std::norm(v);
      }
      const double norm = std::sqrt(norm2);
      valid[f][t] = norm > 0.0;
      any_energy = any_energy || norm > 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        z[f](static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t)) =
            norm > 0.0 ? observation(d, t, f) / norm : std::complex<double>{};
      }
    }
  }
  if (!any_energy) throw DataError("fit_cacgmm: observation is all zero");

  const MaskSet init = init_posteriors(T, F, K, options.seed);
  std::vector<Eigen::MatrixXd> gamma(F, Eigen::MatrixXd(Ki, Ti));
  std::vector<Eigen::MatrixXd> quad(F, Eigen::MatrixXd::Ones(Ki, Ti));
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < T; ++t) {
        gamma[f](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = init(k, t, f);
      }
    }
  }

  Permutation identity(K);
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<Permutation> total_permutation(F, identity);

  CacgmmResult result;
  auto& shape = result.params.shape;
  auto& weight = result.params.weight;
  shape.assign(K, std::vector<Eigen::MatrixXcd>(F, Eigen::MatrixXcd::Identity(Di, Di)));
  const double log_norm = std::lgamma(Dd) - std::log(2.0) - Dd * std::log(std::numbers::pi);
  Eigen::MatrixXd log_p(Ki, Ti);

  for (std::size_t iteration = 0; iteration < options.iterations; ++iteration) {
    // M-step.
    weight = Eigen::MatrixXd::Zero(Ki, Ti);
    for (const auto& g : gamma) weight += g;
    weight /= static_cast<double>(F);
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t k = 0; k < K; ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        Eigen::MatrixXcd weighted = z[f];
        double mass = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          const auto ti = static_cast<Eigen::Index>(t);
          const double g = valid[f][t] ? gamma[f](ki, ti) : 0.0;
          mass += g;
          weighted.col(ti) *= std::sqrt(g / quad[f](ki, ti));
        }
        Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(Di, Di);
        if (mass > 0.0) {
          b = (Dd / mass) * (weighted * weighted.adjoint());
          if (!(b.trace().real() > 0.0)) b.setIdentity();
        }
        regularize(b, options.regularization);
        shape[k][f] = std::move(b);
      }
    }

    // E-step.
    double log_likelihood = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t k = 0; k < K; ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        Eigen::LLT<Eigen::MatrixXcd> llt(shape[k][f]);
        if (llt.info() != Eigen::Success) {
          throw NumericalError("fit_cacgmm: shape matrix of class " + std::to_string(k) + " is singular at bin " +
                               std::to_string(f));
        }
        const double log_det = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
        const Eigen::MatrixXcd whitened = llt.matrixL().solve(z[f]);
        quad[f].row(ki) = whitened.colwise().squaredNorm();
        for (Eigen::Index t = 0; t < Ti; ++t) {
          log_p(ki, t) = std::log(weight(ki, t)) + log_norm - log_det - Dd * std::log(quad[f](ki, t));
        }
      }
      for (std::size_t t = 0; t < T; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        if (!valid[f][t]) {
          gamma[f].col(ti).setConstant(1.0 / static_cast<double>(K));
          quad[f].col(ti).setOnes();
          continue;
        }
        const double peak = log_p.col(ti).maxCoeff();
        const Eigen::ArrayXd p = (log_p.col(ti).array() - peak).exp();
        const double sum = p.sum();
        gamma[f].col(ti) = p / sum;
        log_likelihood += peak + std::log(sum);
      }
    }
    if (!std::isfinite(log_likelihood)) {
      throw NumericalError("fit_cacgmm: log-likelihood is not finite in iteration " + std::to_string(iteration));
    }
    result.log_likelihood.push_back(log_likelihood);
    if (options.observer) options.observer(iteration, gamma);

    if (options.align && iteration >= options.align_from_iteration) {
      const auto aligned = align_permutations(gamma);
      for (std::size_t f = 0; f < F; ++f) {
        const auto& p = aligned.permutation[f];
        if (is_identity(p)) continue;
        permute_rows(quad[f], p);
        permute_classes(shape, f, p);
        total_permutation[f] = compose(total_permutation[f], p);
      }
    }
  }

  // Weights consistent with the final (aligned) posteriors.
  weight = Eigen::MatrixXd::Zero(Ki, Ti);
  for (const auto& g : gamma) weight += g;
  weight /= static_cast<double>(F);

  if (options.noise_last && K > 1) {
    std::size_t noise = 0;
    double flattest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      const double value = peakiness(shape[k]);
      if (value < flattest) {
        flattest = value;
        noise = k;
      }
    }
    if (noise != K - 1) {
      Permutation order;
      for (std::size_t k = 0; k < K; ++k) {
        if (k != noise) order.push_back(k);
      }
      order.push_back(noise);
      for (std::size_t f = 0; f < F; ++f) {
        permute_rows(gamma[f], order);
        permute_classes(shape, f, order);
        total_permutation[f] = compose(total_permutation[f], order);
      }
      permute_rows(weight, order);
    }
  }

  result.masks = MaskSet(K, T, F);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < T; ++t) {
        result.masks(k, t, f) = gamma[f](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
      }
    }
  }
  result.masks.permutation = std::move(total_permutation);
  return result;
}

}  // namespace mixlab
