#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "mixlab/error.hpp"
#include "mixlab/stft.hpp"
#include "support/oracles.hpp"

using namespace mixlab;

namespace {

MultiSignal random_signal(std::size_t channels, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  MultiSignal x;
  for (std::size_t c = 0; c < channels; ++c) x.push_back(oracle::white_noise(length, rng));
  return x;
}

double relative_error(const MultiSignal& a, const MultiSignal& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    for (std::size_t i = 0; i < a[c].size(); ++i) {
      num += (a[c][i] - b[c][i]) * (a[c][i] - b[c][i]);
      den += b[c][i] * b[c][i];
    }
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST(Stft, ShapeFollowsPadding) {
  const StftConfig config;
  const auto tf = analyze(random_signal(2, 4000, 1), config);
  EXPECT_EQ(tf.channels(), 2u);
  EXPECT_EQ(tf.bins(), 257u);
  const std::size_t padded = 4000 + 2 * 384;
  EXPECT_EQ(tf.frames(), (padded - 512 + 127) / 128 + 1);
  EXPECT_EQ(tf.frames(), num_frames(4000, config));
}

TEST(Stft, BinCenteredToneConcentratesInItsBin) {
  const double f = 10.0 * 8000.0 / 512.0;
  Signal x(8000);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2.0 * std::numbers::pi * f * n / 8000.0);
  const auto tf = analyze({x});
  // Interior frames only: edge frames see the zero padding.
  for (std::size_t t = 3; t + 3 < tf.frames(); ++t) {
    double total = 0.0, near = 0.0;
    for (std::size_t b = 0; b < tf.bins(); ++b) {
      const double e = std::norm(tf(0, t, b));
      total += e;
      if (b >= 9 && b <= 11) near += e;
    }
    EXPECT_GE(near / total, 0.9) << "frame " << t;
  }
}

TEST(Stft, ZeroInZeroOut) {
  const auto tf = analyze({Signal(2000, 0.0)});
  for (const auto& v : tf.data()) EXPECT_EQ(v, std::complex<double>(0.0, 0.0));
  const auto y = synthesize(tf);
  for (double v : y[0]) EXPECT_EQ(v, 0.0);
}

TEST(Stft, Linearity) {
  const auto a = random_signal(2, 3000, 2);
  const auto b = random_signal(2, 3000, 3);
  MultiSignal sum = a;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < 3000; ++i) sum[c][i] += b[c][i];
  }
  const auto lhs = analyze(sum);
  const auto rhs = analyze(a) + analyze(b);
  for (std::size_t i = 0; i < lhs.data().size(); ++i) {
    EXPECT_LT(std::abs(lhs.data()[i] - rhs.data()[i]), 1e-12 * (1.0 + std::abs(rhs.data()[i])));
  }
}

TEST(Stft, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_signal(3, 2000 + 37 * seed, seed);
    const auto y = synthesize(analyze(x));
    ASSERT_EQ(y.size(), x.size());
    ASSERT_EQ(y[0].size(), x[0].size());
    EXPECT_LE(relative_error(y, x), 1e-6);
  }
}

TEST(Stft, ChannelsAreIndependent) {
  auto x = random_signal(3, 2500, 4);
  const auto before = synthesize(analyze(x));
  Rng rng(99);
  x[1] = oracle::white_noise(2500, rng);
  const auto after = synthesize(analyze(x));
  EXPECT_EQ(before[0], after[0]);
  EXPECT_EQ(before[2], after[2]);
  EXPECT_NE(before[1], after[1]);
}

TEST(Stft, ParsevalWithWindowFactor) {
  const StftConfig config;
  const auto w = hann_window(config.size);
  double hop_sum = 0.0;
  for (std::size_t n = 0; n < config.size; ++n) hop_sum += w[n] * w[n];
  hop_sum /= static_cast<double>(config.shift);
  EXPECT_NEAR(parseval_factor(config), config.dft_size * hop_sum, 1e-9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_signal(2, 3000, seed);
    const double time_energy = oracle::energy(x[0]) + oracle::energy(x[1]);
    const double ratio = spectral_energy(analyze(x, config)) / (parseval_factor(config) * time_energy);
    EXPECT_NEAR(ratio, 1.0, 1e-6);
  }
}

TEST(Stft, SynthesisWindowIsDual) {
  const StftConfig config;
  const auto w = hann_window(config.size);
  const auto g = synthesis_window(config);
  for (std::size_t n = 0; n < config.shift; ++n) {
    double s = 0.0;
    for (std::size_t m = n; m < config.size; m += config.shift) s += w[m] * g[m];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Stft, RejectsBadInput) {
  StftConfig config;
  config.shift = 100;
  EXPECT_THROW(validate(config), std::invalid_argument);
  config = {};
  config.shift = 512;
  EXPECT_THROW(validate(config), std::invalid_argument);
  EXPECT_THROW((void)analyze({Signal(100, 1.0)}), DataError);
  EXPECT_THROW((void)analyze({Signal(1000, 1.0), Signal(999, 1.0)}), DataError);
  StftConfig other;
  other.dft_size = 1024;
  EXPECT_THROW((void)synthesize(analyze({Signal(1000, 1.0)}), other), DataError);
}
