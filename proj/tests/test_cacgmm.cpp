#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "mixlab/cacgmm.hpp"
#include "mixlab/error.hpp"
#include "mixlab/geometry.hpp"
#include "mixlab/mixer.hpp"
#include "mixlab/synthetic.hpp"
#include "support/constructed.hpp"
#include "support/oracles.hpp"

using namespace mixlab;

namespace {

using constructed::complex_normal;

TfTensor scene_observation(std::uint64_t seed) {
  const auto scene = sample_scene({}, seed);
  Rng rng(seed);
  MultiSignal sources;
  for (std::size_t k = 0; k < 2; ++k) {
    auto s = synthetic_speech({}, 8000.0, rng);
    s.resize(12000);
    sources.push_back(std::move(s));
  }
  const auto bundle = build_scene_bundle(scene, sources, seed);
  return analyze(bundle.y);
}

bool is_identity(const std::vector<std::size_t>& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != i) return false;
  }
  return true;
}

}  // namespace

TEST(Dirichlet, SimplexAndMoments) {
  const auto m = init_posteriors(200, 50, 3, 8);
  EXPECT_LT(m.simplex_error(), 1e-12);
  double mean[3] = {0, 0, 0};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t t = 0; t < 200; ++t) {
      for (std::size_t f = 0; f < 50; ++f) {
        ASSERT_GE(m(k, t, f), 0.0);
        mean[k] += m(k, t, f);
      }
    }
  }
  // Dirichlet(1, 1, 1): each component has mean 1/3 and variance 1/18.
  const double n = 200.0 * 50.0;
  for (double s : mean) EXPECT_NEAR(s / n, 1.0 / 3.0, 3.0 * std::sqrt(1.0 / 18.0 / n));
  const auto again = init_posteriors(200, 50, 3, 8);
  EXPECT_TRUE(std::equal(m.data().begin(), m.data().end(), again.data().begin()));
}

TEST(Cacgmm, SeparatesOrthogonalSteeringVectors) {
  const auto tf = constructed::orthogonal_steering_data(1);
  CacgmmOptions options;
  options.iterations = 20;
  options.seed = 3;
  const auto result = fit_cacgmm(tf, 2, options);
  for (std::size_t source = 0; source < 2; ++source) {
    EXPECT_GE(constructed::confident_fraction(result.masks, source), 0.95) << "source " << source;
  }
}

TEST(Cacgmm, SimplexHoldsEveryIteration) {
  const auto tf = scene_observation(2);
  CacgmmOptions options;
  options.iterations = 10;
  std::size_t calls = 0;
  options.observer = [&](std::size_t, std::span<const Eigen::MatrixXd> gamma) {
    ++calls;
    for (const auto& g : gamma) {
      ASSERT_LT((g.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
      ASSERT_GE(g.minCoeff(), 0.0);
      ASSERT_LE(g.maxCoeff(), 1.0 + 1e-12);
    }
  };
  const auto result = fit_cacgmm(tf, 2, options);
  EXPECT_EQ(calls, 10u);
  EXPECT_LT(result.masks.simplex_error(), 1e-9);
  EXPECT_EQ(result.log_likelihood.size(), 10u);
}

TEST(Cacgmm, LogLikelihoodIsMonotoneWithoutAlignment) {
  const auto tf = scene_observation(3);
  CacgmmOptions options;
  options.iterations = 40;
  options.align = false;
  const auto ll = fit_cacgmm(tf, 2, options).log_likelihood;
  for (std::size_t i = 1; i < ll.size(); ++i) {
    EXPECT_GE(ll[i], ll[i - 1] - 1e-6 * std::abs(ll[i - 1])) << "iteration " << i;
  }
}

TEST(Cacgmm, ScaleInvariance) {
  const auto tf = scene_observation(4);
  CacgmmOptions options;
  options.iterations = 8;
  const auto base = fit_cacgmm(tf, 2, options);
  auto scaled = tf;
  for (auto& v : scaled.data()) v *= 2.0;
  const auto doubled = fit_cacgmm(scaled, 2, options);
  EXPECT_TRUE(std::equal(base.masks.data().begin(), base.masks.data().end(), doubled.masks.data().begin()));
  // Other factors change the normalized vectors by an ulp or so.
  for (const std::complex<double> c : {std::complex<double>(-3.7, 0.0), std::complex<double>(1e-3, 2e-3)}) {
    auto other = tf;
    for (auto& v : other.data()) v *= c;
    const auto result = fit_cacgmm(other, 2, options);
    double diff = 0.0;
    for (std::size_t i = 0; i < base.masks.data().size(); ++i) {
      diff = std::max(diff, std::abs(base.masks.data()[i] - result.masks.data()[i]));
    }
    EXPECT_LT(diff, 1e-6);
  }
}

TEST(Cacgmm, ShapesStayHermitianPositiveDefinite) {
  const auto tf = scene_observation(5);
  CacgmmOptions options;
  options.iterations = 10;
  const auto result = fit_cacgmm(tf, 2, options);
  ASSERT_EQ(result.params.shape.size(), 3u);
  for (const auto& per_bin : result.params.shape) {
    ASSERT_EQ(per_bin.size(), tf.bins());
    for (const auto& b : per_bin) {
      EXPECT_LT((b - b.adjoint()).cwiseAbs().maxCoeff(), 1e-10 * b.cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(b);
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
  }
  const auto& w = result.params.weight;
  EXPECT_LT((w.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(Cacgmm, SingleSpeakerOnWhiteNoise) {
  TfTensor tf(3, 60, 17);
  Rng rng(6);
  for (auto& v : tf.data()) v = complex_normal(rng);
  CacgmmOptions options;
  options.iterations = 20;
  const auto result = fit_cacgmm(tf, 1, options);
  EXPECT_EQ(result.masks.classes(), 2u);
  EXPECT_LT(result.masks.simplex_error(), 1e-9);
}

TEST(Cacgmm, RejectsBadInput) {
  TfTensor one_channel(1, 10, 5);
  EXPECT_THROW((void)fit_cacgmm(one_channel, 2), DataError);
  TfTensor tf(2, 10, 5);
  Rng rng(1);
  for (auto& v : tf.data()) v = complex_normal(rng);
  tf(0, 3, 2) = std::complex<double>(std::nan(""), 0.0);
  EXPECT_THROW((void)fit_cacgmm(tf, 2), DataError);
}

TEST(Cacgmm, LogDensityIntegratesToUniformForIdentity) {
  // For B = I the density is uniform on the unit sphere in C^D, whose
  // surface area is 2 pi^D / (D - 1)!.
  Eigen::VectorXcd z = Eigen::VectorXcd::Zero(3);
  z(0) = 1.0;
  const double expected = -std::log(2.0 * std::pow(std::numbers::pi, 3) / 2.0);
  EXPECT_NEAR(cacg_log_density(z, Eigen::MatrixXcd::Identity(3, 3)), expected, 1e-12);
}

TEST(Alignment, DetectsSwappedLowerHalf) {
  constexpr std::size_t F = 9, T = 50;
  Rng rng(7);
  Eigen::MatrixXd profile(2, T);
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(T); ++t) {
    profile(0, t) = rng.uniform();
    profile(1, t) = 1.0 - profile(0, t);
  }
  std::vector<Eigen::MatrixXd> gamma(F, profile);
  for (std::size_t f = 0; f <= F / 2; ++f) gamma[f].row(0).swap(gamma[f].row(1));
  const auto result = align_permutations(gamma);
  EXPECT_EQ(result.changed_bins, F / 2);
  for (std::size_t f = 1; f < F; ++f) EXPECT_TRUE(gamma[f].isApprox(gamma[0])) << "bin " << f;
}

TEST(Alignment, AlignedInputAndTiesStayIdentity) {
  Rng rng(8);
  Eigen::MatrixXd profile(3, 40);
  for (Eigen::Index t = 0; t < 40; ++t) {
    const double a = rng.uniform(), b = rng.uniform() * (1.0 - a);
    profile.col(t) << a, b, 1.0 - a - b;
  }
  std::vector<Eigen::MatrixXd> aligned(6, profile);
  const auto r1 = align_permutations(aligned);
  EXPECT_EQ(r1.changed_bins, 0u);
  for (const auto& p : r1.permutation) EXPECT_TRUE(is_identity(p));

  std::vector<Eigen::MatrixXd> flat(6, Eigen::MatrixXd::Constant(3, 40, 1.0 / 3.0));
  const auto r2 = align_permutations(flat);
  EXPECT_EQ(r2.changed_bins, 0u);
  for (const auto& p : r2.permutation) EXPECT_TRUE(is_identity(p));
}

TEST(Alignment, MaskSetRecordsPermutation) {
  MaskSet masks(2, 30, 4);
  Rng rng(9);
  for (std::size_t t = 0; t < 30; ++t) {
    const double a = rng.uniform();
    for (std::size_t f = 0; f < 4; ++f) {
      const bool swap = f == 3;
      masks(0, t, f) = swap ? 1.0 - a : a;
      masks(1, t, f) = swap ? a : 1.0 - a;
    }
  }
  (void)align_permutations(masks);
  ASSERT_EQ(masks.permutation.size(), 4u);
  EXPECT_EQ(masks.permutation[3], (std::vector<std::size_t>{1, 0}));
  for (std::size_t t = 0; t < 30; ++t) EXPECT_EQ(masks(0, t, 3), masks(0, t, 0));
}
