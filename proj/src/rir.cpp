#include "mixlab/rir.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mixlab/error.hpp"

namespace mixlab {

namespace {

struct ImageSource {
  Vec3 position;
  int order;
};

// Allen-Berkley images of `source`: coordinate (1 - 2q) s + 2 m L per axis,
// with |m - q| + |m| wall reflections on that axis.
std::vector<ImageSource> enumerate_images(const Vec3& room, const Vec3& source, double max_distance,
                                          int max_order) {
  std::array<int, 3> bound{};
  for (int axis = 0; axis < 3; ++axis) {
    bound[axis] = static_cast<int>(std::ceil(max_distance / (2.0 * room[axis]))) + 1;
  }
  std::vector<ImageSource> images;
  for (int mx = -bound[0]; mx <= bound[0]; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double x = (1 - 2 * qx) * source[0] + 2.0 * mx * room[0];
      const int ox = std::abs(mx - qx) + std::abs(mx);
      for (int my = -bound[1]; my <= bound[1]; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double y = (1 - 2 * qy) * source[1] + 2.0 * my * room[1];
          const int oy = std::abs(my - qy) + std::abs(my);
          for (int mz = -bound[2]; mz <= bound[2]; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double z = (1 - 2 * qz) * source[2] + 2.0 * mz * room[2];
              const int oz = std::abs(mz - qz) + std::abs(mz);
              const int order = ox + oy + oz;
              if (max_order >= 0 && order > max_order) continue;
              images.push_back({{x, y, z}, order});
            }
          }
        }
      }
    }
  }
  return images;
}

bool inside_room(const Vec3& p, const Vec3& room) {
  for (int axis = 0; axis < 3; ++axis) {
    if (!(p[axis] > 0.0 && p[axis] < room[axis])) return false;
  }
  return true;
}

// Adds gain * w(n - tau) * sinc(n - tau) for the taps around round(tau).
void add_fractional_impulse(Signal& h, double tau, double gain, int taps) {
  const int half = taps / 2;
  const long center = std::lround(tau);
  const double delta = static_cast<double>(center) - tau;  // in [-0.5, 0.5]
  const double window_step = 2.0 * std::numbers::pi / taps;
  const double sin_pi_delta = std::sin(std::numbers::pi * delta);
  // cos/sin of the window phase, advanced by a rotation per tap.
  std::complex<double> phase = std::polar(1.0, window_step * (delta - half));
  const std::complex<double> step = std::polar(1.0, window_step);
  const long size = static_cast<long>(h.size());
  for (int j = -half; j <= half; ++j, phase *= step) {
    const long n = center + j;
    if (n < 0 || n >= size) continue;
    const double t = j + delta;
    double sinc = 1.0;
    if (t != 0.0) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      sinc = sign * sin_pi_delta / (std::numbers::pi * t);
    }
    h[static_cast<std::size_t>(n)] += gain * 0.5 * (1.0 + phase.real()) * sinc;
  }
}

Signal render_response(const std::vector<ImageSource>& images, const Vec3& mic, double reflection,
                       double samples_per_meter, std::size_t length, int taps) {
  Signal h(length, 0.0);
  const double limit = static_cast<double>(length) + taps / 2;
  // Powers of the reflection coefficient by order.
  std::vector<double> attenuation;
  for (const auto& image : images) {
    const double dist = distance(image.position, mic);
    const double tau = dist * samples_per_meter;
    if (tau >= limit) continue;
    if (dist < 1e-9) throw NumericalError("image_method_response: source coincides with mic");
    if (static_cast<std::size_t>(image.order) >= attenuation.size()) {
      const std::size_t old = attenuation.size();
      attenuation.resize(image.order + 1);
      for (std::size_t o = old; o < attenuation.size(); ++o) {
        attenuation[o] = std::pow(reflection, static_cast<double>(o));
      }
    }
    const double gain = attenuation[image.order] / (4.0 * std::numbers::pi * dist);
    add_fractional_impulse(h, tau, gain, taps);
  }
  return h;
}

// Least-squares slope of an energy decay curve (dB) over [-25, -5] dB,
// returned as the time to decay by 60 dB.
double t20_from_decay_curve(const std::vector<double>& decay_db, double step) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t n = 0; n < decay_db.size(); ++n) {
    if (decay_db[n] <= -5.0 && decay_db[n] >= -25.0) {
      const double t = static_cast<double>(n) * step;
      sx += t;
      sy += decay_db[n];
      sxx += t * t;
      sxy += t * decay_db[n];
      ++count;
    }
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return -60.0 / slope;
}

// Decay time of the direction-averaged image energy for unit decay rate per
// meter, i.e. energy along direction u falls as exp(-s * g(u)) with
// g(u) = sum_i |u_i| / L_i and s the path length scaled by -2 ln(beta).
double unit_rate_decay_time(const Vec3& room) {
  constexpr int kGrid = 48;
  std::vector<double> rates;
  rates.reserve(kGrid * kGrid);
  // One octant suffices by symmetry; (cos theta, phi) grid is equal-area.
  for (int i = 0; i < kGrid; ++i) {
    const double cz = (i + 0.5) / kGrid;
    const double sz = std::sqrt(1.0 - cz * cz);
    for (int j = 0; j < kGrid; ++j) {
      const double phi = (j + 0.5) / kGrid * 0.5 * std::numbers::pi;
      rates.push_back(sz * std::cos(phi) / room[0] + sz * std::sin(phi) / room[1] + cz / room[2]);
    }
  }
  double mean_rate = 0.0;
  for (const double g : rates) mean_rate += g;
  mean_rate /= static_cast<double>(rates.size());

  const double expected = 6.0 * std::numbers::ln10 / mean_rate;
  const double step = expected / 2000.0;
  std::vector<double> decay_db;
  double initial = 0.0;
  for (int n = 0; n < 200000; ++n) {
    const double s = n * step;
    double remaining = 0.0;
    for (const double g : rates) remaining += std::exp(-g * s) / g;
    if (n == 0) initial = remaining;
    decay_db.push_back(10.0 * std::log10(remaining / initial));
    if (decay_db.back() < -26.0) break;
  }
  return t20_from_decay_curve(decay_db, step);
}

void check_options(const RirOptions& options) {
  if (options.kernel_taps < 1 || options.kernel_taps % 2 == 0) {
    throw std::invalid_argument("RirOptions: kernel_taps must be odd and positive");
  }
  if (!(options.sound_speed > 0.0)) throw std::invalid_argument("RirOptions: sound_speed must be positive");
}

}  // namespace

std::size_t RirSet::length() const {
  return (h.empty() || h.front().empty()) ? 0 : h.front().front().size();
}

double sabine_absorption(const Vec3& room_dims, double t60) {
  if (!(t60 > 0.0)) throw std::invalid_argument("sabine_absorption: t60 must be positive");
  for (const double d : room_dims) {
    if (!(d > 0.0)) throw std::invalid_argument("sabine_absorption: room dimensions must be positive");
  }
  const double volume = room_dims[0] * room_dims[1] * room_dims[2];
  const double surface =
      2.0 * (room_dims[0] * room_dims[1] + room_dims[0] * room_dims[2] + room_dims[1] * room_dims[2]);
  const double alpha = 0.161 * volume / (surface * t60);
  if (alpha >= 1.0) {
    throw NumericalError("sabine_absorption: T60 of " + std::to_string(t60) +
                         " s is infeasible for this room (absorption >= 1)");
  }
  return alpha;
}

double t60_to_reflection(const Vec3& room_dims, double t60) {
  const double alpha = sabine_absorption(room_dims, t60);
  return std::clamp(std::sqrt(1.0 - alpha), std::numeric_limits<double>::min(), 1.0);
}

double modeled_t60(const Vec3& room_dims, double reflection, double sound_speed) {
  if (!(reflection > 0.0 && reflection <= 1.0)) {
    throw std::invalid_argument("modeled_t60: reflection must be in (0, 1]");
  }
  if (reflection == 1.0) return std::numeric_limits<double>::infinity();
  return unit_rate_decay_time(room_dims) / (-2.0 * sound_speed * std::log(reflection));
}

double decay_matched_reflection(const Vec3& room_dims, double t60, double sound_speed) {
  if (!(t60 > 0.0)) throw std::invalid_argument("decay_matched_reflection: t60 must be positive");
  for (const double d : room_dims) {
    if (!(d > 0.0)) throw std::invalid_argument("decay_matched_reflection: room dimensions must be positive");
  }
  if (std::isinf(t60)) return 1.0;
  const double beta = std::exp(-unit_rate_decay_time(room_dims) / (2.0 * sound_speed * t60));
  if (!(beta > 0.0 && beta < 1.0)) {
    throw NumericalError("decay_matched_reflection: T60 of " + std::to_string(t60) + " s is infeasible");
  }
  return beta;
}

void allen_berkley_high_pass(Signal& h, double sample_rate) {
  const double w = 2.0 * std::numbers::pi * 100.0 / sample_rate;
  const double r1 = std::exp(-w);
  const double b1 = 2.0 * r1 * std::cos(w);
  const double b2 = -r1 * r1;
  const double a1 = -(1.0 + r1);
  double y0 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& x : h) {
    y2 = y1;
    y1 = y0;
    y0 = b1 * y1 + b2 * y2 + x;
    x = y0 + a1 * y1 + r1 * y2;
  }
}

std::size_t default_rir_length(double t60, double sample_rate) {
  return static_cast<std::size_t>(std::ceil(1.25 * t60 * sample_rate));
}

Signal image_method_response(const Vec3& room_dims, const Vec3& source, const Vec3& mic,
                             double reflection, double sample_rate, std::size_t length,
                             const RirOptions& options) {
  check_options(options);
  if (!inside_room(source, room_dims) || !inside_room(mic, room_dims)) {
    throw DataError("image_method_response: position outside the room");
  }
  const double samples_per_meter = sample_rate / options.sound_speed;
  const double max_distance = (static_cast<double>(length) + options.kernel_taps) / samples_per_meter;
  const auto images = enumerate_images(room_dims, source, max_distance, options.max_order);
  Signal h = render_response(images, mic, reflection, samples_per_meter, length, options.kernel_taps);
  if (options.high_pass) allen_berkley_high_pass(h, sample_rate);
  return h;
}

RirSet simulate_rir(const SceneGeometry& scene, const RirOptions& options) {
  check_options(options);
  const double fs = scene.sample_rate;
  const std::size_t length =
      options.rir_length == 0 ? default_rir_length(scene.t60, fs) : options.rir_length;
  if (static_cast<double>(length) < scene.t60 * fs) {
    throw std::invalid_argument("simulate_rir: rir_length must be at least T60 * sample_rate");
  }
  for (const auto& p : scene.mic_positions) {
    if (!inside_room(p, scene.room_dims)) throw DataError("simulate_rir: mic outside the room");
  }
  for (const auto& p : scene.source_positions) {
    if (!inside_room(p, scene.room_dims)) throw DataError("simulate_rir: source outside the room");
  }

  RirSet rirs;
  rirs.sample_rate = fs;
  rirs.t60_target = scene.t60;
  if (std::isinf(scene.t60)) {
    rirs.reflection_coefficient = 1.0;
  } else if (options.reflection_model == ReflectionModel::kSabine) {
    rirs.reflection_coefficient = t60_to_reflection(scene.room_dims, scene.t60);
  } else {
    rirs.reflection_coefficient = decay_matched_reflection(scene.room_dims, scene.t60, options.sound_speed);
  }

  const double samples_per_meter = fs / options.sound_speed;
  const double max_distance = (static_cast<double>(length) + options.kernel_taps) / samples_per_meter;
  for (const auto& source : scene.source_positions) {
    for (const auto& mic : scene.mic_positions) {
      if (distance(source, mic) * samples_per_meter >= static_cast<double>(length)) {
        throw DataError("simulate_rir: rir_length too short to contain the direct path");
      }
    }
    const auto images = enumerate_images(scene.room_dims, source, max_distance, options.max_order);
    MultiSignal per_mic;
    per_mic.reserve(scene.mic_positions.size());
    for (const auto& mic : scene.mic_positions) {
      Signal h = render_response(images, mic, rirs.reflection_coefficient, samples_per_meter, length,
                                 options.kernel_taps);
      if (options.high_pass) allen_berkley_high_pass(h, fs);
      per_mic.push_back(std::move(h));
    }
    rirs.start_sample.push_back(detect_rir_start(per_mic));
    rirs.h.push_back(std::move(per_mic));
  }
  split_early_late(rirs, options.early_window_s);
  return rirs;
}

std::size_t detect_rir_start(std::span<const Signal> channels) {
  std::size_t start = std::numeric_limits<std::size_t>::max();
  for (const auto& channel : channels) {
    double peak = 0.0;
    for (const double v : channel) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) continue;
    const double threshold = peak / 10.0;
    for (std::size_t n = 0; n < channel.size(); ++n) {
      if (std::abs(channel[n]) > threshold) {
        start = std::min(start, n);
        break;
      }
    }
  }
  if (start == std::numeric_limits<std::size_t>::max()) {
    throw DataError("detect_rir_start: impulse responses are all zero");
  }
  return start;
}

void split_early_late(RirSet& rirs, double early_window_s) {
  if (rirs.start_sample.size() != rirs.h.size()) {
    throw DataError("split_early_late: start_sample missing for some sources");
  }
  const auto window = static_cast<std::size_t>(std::lround(early_window_s * rirs.sample_rate));
  rirs.h_early.assign(rirs.h.size(), {});
  rirs.h_late.assign(rirs.h.size(), {});
  rirs.early_end.assign(rirs.h.size(), 0);
  for (std::size_t k = 0; k < rirs.h.size(); ++k) {
    const std::size_t boundary = rirs.start_sample[k] + window;
    rirs.early_end[k] = boundary;
    if (boundary > rirs.length()) {
      std::clog << "split_early_late: early window of source " << k
                << " extends past the RIR; late part is empty\n";
    }
    for (const auto& channel : rirs.h[k]) {
      Signal early(channel.size(), 0.0);
      Signal late(channel.size(), 0.0);
      for (std::size_t n = 0; n < channel.size(); ++n) {
        (n < boundary ? early : late)[n] = channel[n];
      }
      rirs.h_early[k].push_back(std::move(early));
      rirs.h_late[k].push_back(std::move(late));
    }
  }
}

}  // namespace mixlab
