#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mixlab/error.hpp"
#include "mixlab/geometry.hpp"
#include "mixlab/rir.hpp"
#include "support/oracles.hpp"

using namespace mixlab;

namespace {

SceneGeometry two_mic_scene() {
  SceneGeometry scene;
  scene.room_dims = {6.0, 5.0, 3.0};
  scene.array_center = {3.0, 2.5, 1.2};
  scene.array_radius = 0.1;
  scene.mic_positions = {{2.9, 2.5, 1.2}, {3.1, 2.5, 1.2}};
  scene.source_positions = {{1.5, 2.3, 1.5}};
  scene.t60 = 0.3;
  scene.snr = 25.0;
  return scene;
}

double relative_error(const Signal& a, const Signal& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(num / oracle::energy(b));
}

}  // namespace

TEST(Sabine, MatchesDirectFormula) {
  EXPECT_NEAR(t60_to_reflection({8, 6, 3}, 0.35), oracle::sabine_beta(8, 6, 3, 0.35), 1e-15);
  EXPECT_NEAR(sabine_absorption({8, 6, 3}, 0.35), 0.161 * 144.0 / (180.0 * 0.35), 1e-15);
}

TEST(Sabine, InfiniteT60IsLossless) {
  EXPECT_EQ(t60_to_reflection({8, 6, 3}, std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_GT(t60_to_reflection({8, 6, 3}, 1e6), 1.0 - 1e-6);
}

TEST(Sabine, TinyRoomIsInfeasible) {
  EXPECT_NEAR(sabine_absorption({1, 1, 1}, 0.05), 0.161 / 0.3, 1e-15);
  EXPECT_THROW((void)sabine_absorption({1, 1, 1}, 0.025), NumericalError);
  EXPECT_THROW((void)t60_to_reflection({1, 1, 1}, 0.025), NumericalError);
  EXPECT_THROW((void)sabine_absorption({1, 1, 1}, -1.0), std::invalid_argument);
}

TEST(DecayMatched, ModelHitsTarget) {
  for (double t60 : {0.2, 0.35, 0.5}) {
    const double beta = decay_matched_reflection({8, 6, 3}, t60);
    EXPECT_GT(beta, 0.0);
    EXPECT_LT(beta, 1.0);
    EXPECT_NEAR(modeled_t60({8, 6, 3}, beta), t60, 1e-3 * t60);
  }
}

TEST(ImageMethod, AnechoicPeakMatchesFreeField) {
  RirOptions options;
  options.max_order = 0;
  options.high_pass = false;
  const Vec3 room{8, 6, 3};
  const Vec3 mic{4, 3, 1.5};
  const Vec3 source{5.5, 3, 1.5};
  const auto h = image_method_response(room, source, mic, 0.9, 8000.0, 400, options);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (std::abs(h[i]) > std::abs(h[arg])) arg = i;
  }
  EXPECT_EQ(arg, static_cast<std::size_t>(std::lround(1.5 / 343.0 * 8000.0)));
  // 1.5 m is 34.985 samples, so the largest sample is the peak itself.
  const double expected = 1.0 / (4.0 * std::numbers::pi * 1.5);
  EXPECT_NEAR(std::abs(h[arg]), expected, 0.01 * expected);
  const auto [lo, hi] = oracle::passband_magnitude(h);
  EXPECT_NEAR(lo, expected, 0.01 * expected);
  EXPECT_NEAR(hi, expected, 0.01 * expected);
}

TEST(ImageMethod, FractionalDelayPeakAmplitude) {
  RirOptions options;
  options.max_order = 0;
  options.high_pass = false;
  // 1.3 m is 30.32 samples: the peak falls between samples.
  const auto h = image_method_response({8, 6, 3}, {5.3, 3, 1.5}, {4, 3, 1.5}, 0.9, 8000.0, 400, options);
  const double expected = 1.0 / (4.0 * std::numbers::pi * 1.3);
  const auto [lo, hi] = oracle::passband_magnitude(h);
  EXPECT_NEAR(lo, expected, 0.01 * expected);
  EXPECT_NEAR(hi, expected, 0.01 * expected);
  // The sampled kernel is a sinc centred between samples.
  std::size_t arg = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (std::abs(h[i]) > std::abs(h[arg])) arg = i;
  }
  EXPECT_EQ(arg, 30u);
  EXPECT_NEAR(h[arg], expected * std::sin(std::numbers::pi * 0.32) / (std::numbers::pi * 0.32), 0.01 * expected);
}

TEST(ImageMethod, NearerMicPeaksFirst) {
  RirOptions options;
  options.rir_length = 3000;
  const auto rirs = simulate_rir(two_mic_scene(), options);
  const auto peak = [](const Signal& h) {
    std::size_t arg = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (std::abs(h[i]) > std::abs(h[arg])) arg = i;
    }
    return arg;
  };
  EXPECT_LE(peak(rirs.h[0][0]), peak(rirs.h[0][1]));
}

TEST(ImageMethod, Reciprocity) {
  const Vec3 room{6.0, 5.0, 3.0};
  const Vec3 a{1.5, 2.3, 1.5};
  const Vec3 b{3.1, 2.5, 1.2};
  const auto forward = image_method_response(room, a, b, 0.85, 8000.0, 2000);
  const auto backward = image_method_response(room, b, a, 0.85, 8000.0, 2000);
  EXPECT_LT(relative_error(backward, forward), 1e-6);
}

TEST(ImageMethod, SchroederT60NearTarget) {
  auto scene = sample_scene({}, 77);
  scene.t60 = 0.3;
  const auto rirs = simulate_rir(scene);
  for (std::size_t k = 0; k < rirs.num_sources(); ++k) {
    const double measured = oracle::schroeder_t60(rirs.h[k], rirs.start_sample[k], rirs.sample_rate);
    EXPECT_NEAR(measured, 0.3, 0.06) << "source " << k;
  }
}

TEST(ImageMethod, RejectsBadInput) {
  auto scene = two_mic_scene();
  RirOptions options;
  options.rir_length = 1000;  // shorter than 0.3 s * 8000
  EXPECT_THROW((void)simulate_rir(scene, options), std::invalid_argument);
  scene.source_positions[0] = {7.0, 2.0, 1.0};
  EXPECT_THROW((void)simulate_rir(scene), DataError);
  scene = two_mic_scene();
  scene.t60 = 0.001;
  options.rir_length = 20;  // the direct path takes about 35 samples
  EXPECT_THROW((void)simulate_rir(scene, options), DataError);
  EXPECT_THROW((void)image_method_response({6, 5, 3}, {1, 1, 1}, {1, 1, 1}, 0.8, 8000.0, 100), NumericalError);
}

TEST(RirStart, Examples) {
  const std::vector<Signal> single{{0.0, 0.0, 1.0, 0.05}};
  EXPECT_EQ(detect_rir_start(single), 2u);
  Signal late(20, 0.0);
  late[5] = 0.091;
  late[9] = 0.9;
  EXPECT_EQ(detect_rir_start(std::vector<Signal>{late}), 5u);
  Signal a(20, 0.0);
  Signal b(20, 0.0);
  a[7] = 1.0;
  b[4] = 0.5;
  EXPECT_EQ(detect_rir_start(std::vector<Signal>{a, b}), 4u);
  EXPECT_THROW((void)detect_rir_start(std::vector<Signal>{Signal(10, 0.0)}), DataError);
}

TEST(EarlyLate, BoundaryAndExactSplit) {
  RirSet rirs;
  rirs.sample_rate = 8000.0;
  Rng rng(3);
  rirs.h = {{oracle::white_noise(2000, rng), oracle::white_noise(2000, rng)}};
  rirs.start_sample = {12};
  split_early_late(rirs);
  EXPECT_EQ(rirs.early_end[0], 412u);
  for (std::size_t d = 0; d < 2; ++d) {
    const auto& h = rirs.h[0][d];
    const auto& early = rirs.h_early[0][d];
    const auto& late = rirs.h_late[0][d];
    for (std::size_t n = 0; n < h.size(); ++n) {
      EXPECT_EQ(early[n] + late[n], h[n]);
      if (n >= 412) EXPECT_EQ(early[n], 0.0);
      if (n < 412) EXPECT_EQ(late[n], 0.0);
    }
    EXPECT_NEAR(oracle::energy(early) + oracle::energy(late), oracle::energy(h), 1e-12 * oracle::energy(h));
  }
}

TEST(EarlyLate, DeltaHasNoLatePart) {
  RirSet rirs;
  Signal delta(1000, 0.0);
  delta[30] = 1.0;
  rirs.h = {{delta}};
  rirs.start_sample = {detect_rir_start(rirs.h[0])};
  split_early_late(rirs);
  EXPECT_EQ(oracle::energy(rirs.h_late[0][0]), 0.0);
  EXPECT_EQ(rirs.h_early[0][0], delta);
}

TEST(EarlyLate, BoundaryPastEndKeepsEverythingEarly) {
  RirSet rirs;
  rirs.h = {{Signal(300, 1.0)}};
  rirs.start_sample = {0};
  split_early_late(rirs);
  EXPECT_EQ(rirs.h_early[0][0], rirs.h[0][0]);
  EXPECT_EQ(oracle::energy(rirs.h_late[0][0]), 0.0);
}

TEST(EarlyLate, SimulatedSplitIsExact) {
  RirOptions options;
  options.rir_length = 3000;
  const auto rirs = simulate_rir(two_mic_scene(), options);
  for (std::size_t d = 0; d < rirs.num_mics(); ++d) {
    for (std::size_t n = 0; n < rirs.length(); ++n) {
      ASSERT_EQ(rirs.h_early[0][d][n] + rirs.h_late[0][d][n], rirs.h[0][d][n]);
    }
  }
}
