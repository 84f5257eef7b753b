#include "mixlab/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixlab/error.hpp"
#include "mixlab/fft.hpp"
#include "mixlab/random.hpp"

namespace mixlab {

namespace {

Signal sum_of_images(const std::vector<MultiSignal>& images, std::size_t d) {
  Signal total = images.front()[d];
  for (std::size_t k = 1; k < images.size(); ++k) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += images[k][d][i];
  }
  return total;
}

void check_images(const std::vector<MultiSignal>& images) {
  if (images.empty() || images.front().empty()) throw DataError("no speech images");
  const std::size_t mics = images.front().size();
  const std::size_t length = images.front().front().size();
  for (const auto& image : images) {
    if (image.size() != mics) throw DataError("speech images differ in channel count");
    for (const auto& channel : image) {
      if (channel.size() != length) throw DataError("speech images differ in length");
    }
  }
}

}  // namespace

std::vector<std::string> check(const MixtureBundle& b, double tolerance) {
  std::vector<std::string> problems;
  const std::size_t K = b.num_sources();
  const std::size_t D = b.num_mics();
  const std::size_t N = b.length();
  if (b.offset.size() != K || b.x.size() != K || b.x_early.size() != K || b.x_late.size() != K) {
    problems.emplace_back("source count mismatch");
    return problems;
  }
  if (b.n.size() != D) problems.emplace_back("noise channel count mismatch");
  for (std::size_t k = 0; k < K; ++k) {
    if (b.s[k].size() != N) problems.push_back("source " + std::to_string(k) + " length mismatch");
    for (const auto* set : {&b.x[k], &b.x_early[k], &b.x_late[k]}) {
      if (set->size() != D) {
        problems.push_back("image " + std::to_string(k) + " channel count mismatch");
        return problems;
      }
      for (const auto& channel : *set) {
        if (channel.size() != N) {
          problems.push_back("image " + std::to_string(k) + " length mismatch");
          return problems;
        }
      }
    }
  }
  for (const auto& channel : b.n) {
    if (channel.size() != N) {
      problems.emplace_back("noise length mismatch");
      return problems;
    }
  }
  if (!problems.empty()) return problems;

  double split_error = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t i = 0; i < N; ++i) {
        split_error = std::max(split_error, std::abs(b.x[k][d][i] - b.x_early[k][d][i] - b.x_late[k][d][i]));
      }
    }
  }
  if (!(split_error <= tolerance)) problems.emplace_back("x != x_early + x_late");

  for (std::size_t d = 0; d < D; ++d) {
    Signal total = sum_of_images(b.x, d);
    for (std::size_t i = 0; i < N; ++i) {
      if (b.y[d][i] != total[i] + b.n[d][i]) {
        problems.emplace_back("y != sum of images + noise");
        return problems;
      }
    }
  }
  return problems;
}

PaddedSources pad_with_random_offset(const MultiSignal& sources, std::uint64_t seed) {
  if (sources.empty()) throw DataError("pad_with_random_offset: no sources");
  std::size_t longest = 0;
  for (const auto& s : sources) longest = std::max(longest, s.size());
  Rng rng(seed);
  PaddedSources out;
  for (const auto& s : sources) {
    const std::size_t slack = longest - s.size();
    const std::size_t offset = slack == 0 ? 0 : static_cast<std::size_t>(rng.uniform_int(0, slack));
    Signal padded(longest, 0.0);
    std::copy(s.begin(), s.end(), padded.begin() + static_cast<std::ptrdiff_t>(offset));
    out.signals.push_back(std::move(padded));
    out.offsets.push_back(offset);
  }
  return out;
}

SpeechImages render_images(const MultiSignal& sources, const RirSet& rirs) {
  if (sources.size() != rirs.num_sources()) throw DataError("render_images: source count does not match RIRs");
  if (rirs.start_sample.size() != sources.size() || rirs.h_early.size() != sources.size() ||
      rirs.h_late.size() != sources.size()) {
    throw DataError("render_images: incomplete RIR set");
  }
  const std::size_t length = sources.front().size();
  const std::size_t D = rirs.num_mics();
  SpeechImages out;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (sources[k].size() != length) throw DataError("render_images: sources must be padded to equal length");
    if (rirs.h[k].size() != D || rirs.h_early[k].size() != D || rirs.h_late[k].size() != D) {
      throw DataError("render_images: RIR channel count mismatch");
    }
    std::vector<Signal> filters;
    filters.reserve(3 * D);
    for (const auto* set : {&rirs.h[k], &rirs.h_early[k], &rirs.h_late[k]}) {
      filters.insert(filters.end(), set->begin(), set->end());
    }
    auto rendered = fft_convolve_many(sources[k], filters, rirs.start_sample[k], length);
    const auto part = [&](std::size_t i) {
      return MultiSignal(std::make_move_iterator(rendered.begin() + static_cast<std::ptrdiff_t>(i * D)),
                         std::make_move_iterator(rendered.begin() + static_cast<std::ptrdiff_t>((i + 1) * D)));
    };
    out.x.push_back(part(0));
    out.x_early.push_back(part(1));
    out.x_late.push_back(part(2));
  }
  return out;
}

NoisyObservation add_sensor_noise(const std::vector<MultiSignal>& images, double snr_db, std::uint64_t seed) {
  check_images(images);
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw DataError("add_sensor_noise: SNR must be finite or +inf");
  }
  const std::size_t D = images.front().size();
  const std::size_t N = images.front().front().size();

  MultiSignal clean(D);
  double power = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    clean[d] = sum_of_images(images, d);
    for (const double v : clean[d]) power += v * v;
  }
  power /= static_cast<double>(D * N);
  if (!(power > 0.0)) throw DataError("add_sensor_noise: images are all zero, SNR undefined");

  NoisyObservation out;
  out.n.assign(D, Signal(N, 0.0));
  if (std::isfinite(snr_db)) {
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    Rng rng(seed);
    for (auto& channel : out.n) {
      for (double& v : channel) v = sigma * rng.normal();
    }
  }
  out.y = std::move(clean);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t i = 0; i < N; ++i) out.y[d][i] += out.n[d][i];
  }
  return out;
}

MixtureBundle build_scene_bundle(const SceneGeometry& scene, const MultiSignal& sources, std::uint64_t seed,
                                 const RirOptions& options) {
  if (sources.size() != scene.source_positions.size()) {
    throw DataError("build_scene_bundle: " + std::to_string(sources.size()) + " signals for " +
                    std::to_string(scene.source_positions.size()) + " source positions");
  }
  return build_scene_bundle(scene, sources, seed, simulate_rir(scene, options));
}

MixtureBundle build_scene_bundle(const SceneGeometry& scene, const MultiSignal& sources, std::uint64_t seed,
                                 const RirSet& rirs) {
  if (sources.size() != scene.source_positions.size() || sources.size() != rirs.num_sources()) {
    throw DataError("build_scene_bundle: source count mismatch");
  }
  if (rirs.sample_rate != scene.sample_rate) throw DataError("build_scene_bundle: sample rate mismatch");

  MixtureBundle bundle;
  bundle.sample_rate = scene.sample_rate;
  bundle.snr = scene.snr;
  auto padded = pad_with_random_offset(sources, Rng::mix(seed, "padding"));
  auto images = render_images(padded.signals, rirs);
  auto noisy = add_sensor_noise(images.x, scene.snr, Rng::mix(seed, "noise"));
  bundle.s = std::move(padded.signals);
  bundle.offset = std::move(padded.offsets);
  bundle.x = std::move(images.x);
  bundle.x_early = std::move(images.x_early);
  bundle.x_late = std::move(images.x_late);
  bundle.n = std::move(noisy.n);
  bundle.y = std::move(noisy.y);
  return bundle;
}

double measured_snr(const MixtureBundle& bundle) {
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t d = 0; d < bundle.num_mics(); ++d) {
    const Signal total = sum_of_images(bundle.x, d);
    for (const double v : total) signal += v * v;
    for (const double v : bundle.n[d]) noise += v * v;
  }
  return 10.0 * std::log10(signal / noise);
}

}  // namespace mixlab
