#include "mixlab/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mixlab/error.hpp"
#include "mixlab/random.hpp"

namespace mixlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRadiusTolerance = 1e-9;

void check_range(const Range& range, const char* name) {
  if (!(range.low <= range.high) || !std::isfinite(range.low) || !std::isfinite(range.high)) {
    throw std::invalid_argument(std::string("GeometryConfig: invalid range for ") + name);
  }
}

double draw(Rng& rng, const Range& range) { return rng.uniform(range.low, range.high); }

Vec3 rotate(const std::array<std::array<double, 3>, 3>& r, const Vec3& v) {
  return {r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
          r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
          r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2]};
}

bool inside_with_clearance(const Vec3& p, const Vec3& room, double clearance) {
  for (int axis = 0; axis < 3; ++axis) {
    if (!(p[axis] >= clearance && p[axis] <= room[axis] - clearance)) return false;
  }
  return true;
}

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) j.at(key).get_to(value);
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

std::array<std::array<double, 3>, 3> rotation_matrix(const Vec3& angles) {
  const double cx = std::cos(angles[0]), sx = std::sin(angles[0]);
  const double cy = std::cos(angles[1]), sy = std::sin(angles[1]);
  const double cz = std::cos(angles[2]), sz = std::sin(angles[2]);
  // Rz * Ry * Rx
  return {{{cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx},
           {sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx},
           {-sy, cy * sx, cy * cx}}};
}

void validate_config(const GeometryConfig& c) {
  check_range(c.room_length, "room_length");
  check_range(c.room_width, "room_width");
  check_range(c.room_height, "room_height");
  check_range(c.array_x, "array_x");
  check_range(c.array_y, "array_y");
  check_range(c.array_z, "array_z");
  check_range(c.source_distance, "source_distance");
  check_range(c.source_height, "source_height");
  check_range(c.t60, "t60");
  check_range(c.snr, "snr");
  if (c.num_mics < 2) throw std::invalid_argument("GeometryConfig: num_mics must be >= 2");
  if (c.num_sources < 1) throw std::invalid_argument("GeometryConfig: num_sources must be >= 1");
  if (!(c.array_radius > 0.0)) throw std::invalid_argument("GeometryConfig: array_radius must be positive");
  if (!(c.sample_rate > 0.0)) throw std::invalid_argument("GeometryConfig: sample_rate must be positive");
  if (!(c.t60.low > 0.0)) throw std::invalid_argument("GeometryConfig: t60 must be positive");
  if (c.tilt_max < 0.0) throw std::invalid_argument("GeometryConfig: tilt_max must be >= 0");
  if (c.source_distance.low < 0.0) throw std::invalid_argument("GeometryConfig: negative source distance");
  if (c.max_attempts < 1) throw std::invalid_argument("GeometryConfig: max_attempts must be >= 1");
  const double half_room = 0.5 * std::min(c.room_length.low, c.room_width.low);
  if (!(c.array_radius + c.source_distance.high < half_room)) {
    throw std::invalid_argument(
        "GeometryConfig: array_radius + max source distance must be below half the smallest "
        "horizontal room dimension");
  }
}

SceneGeometry sample_scene(const GeometryConfig& config, std::uint64_t seed) {
  validate_config(config);
  Rng rng(seed);
  SceneGeometry scene;
  scene.seed = seed;
  scene.sample_rate = config.sample_rate;
  scene.array_radius = config.array_radius;

  scene.room_dims = {draw(rng, config.room_length), draw(rng, config.room_width),
                     draw(rng, config.room_height)};
  scene.array_center = {draw(rng, config.array_x), draw(rng, config.array_y),
                        draw(rng, config.array_z)};
  const double rot_z = rng.uniform(0.0, kTwoPi);
  const double tilt_x = rng.uniform(-config.tilt_max, config.tilt_max);
  const double tilt_y = rng.uniform(-config.tilt_max, config.tilt_max);
  scene.array_rotation = {tilt_x, tilt_y, rot_z};

  const auto rotation = rotation_matrix(scene.array_rotation);
  for (int m = 0; m < config.num_mics; ++m) {
    const double angle = kTwoPi * m / config.num_mics;
    const Vec3 local{config.array_radius * std::cos(angle), config.array_radius * std::sin(angle), 0.0};
    const Vec3 offset = rotate(rotation, local);
    scene.mic_positions.push_back({scene.array_center[0] + offset[0],
                                   scene.array_center[1] + offset[1],
                                   scene.array_center[2] + offset[2]});
  }
  for (const auto& mic : scene.mic_positions) {
    if (!inside_with_clearance(mic, scene.room_dims, config.wall_clearance)) {
      throw NumericalError("sample_scene: array does not fit inside the room");
    }
  }

  int attempts = 0;
  for (int k = 0; k < config.num_sources; ++k) {
    while (true) {
      if (++attempts > config.max_attempts) {
        throw NumericalError("sample_scene: no admissible source position after " +
                             std::to_string(config.max_attempts) + " attempts");
      }
      const double dist = draw(rng, config.source_distance);
      const double azimuth = rng.uniform(0.0, kTwoPi);
      const double height = draw(rng, config.source_height);
      const double dz = height - scene.array_center[2];
      if (std::abs(dz) >= dist) continue;
      const double horizontal = std::sqrt(dist * dist - dz * dz);
      const Vec3 pos{scene.array_center[0] + horizontal * std::cos(azimuth),
                     scene.array_center[1] + horizontal * std::sin(azimuth), height};
      if (!inside_with_clearance(pos, scene.room_dims, config.wall_clearance)) continue;
      scene.source_positions.push_back(pos);
      break;
    }
  }

  scene.t60 = draw(rng, config.t60);
  scene.snr = draw(rng, config.snr);
  return scene;
}

std::vector<std::string> validate_scene(const SceneGeometry& scene, const GeometryConfig& config) {
  std::vector<std::string> violations;
  for (int axis = 0; axis < 3; ++axis) {
    if (!(scene.room_dims[axis] > 0.0)) {
      violations.emplace_back("room dimension " + std::to_string(axis) + " not positive");
    }
  }
  if (scene.mic_positions.size() < 2) violations.emplace_back("fewer than two mics");
  if (scene.source_positions.empty()) violations.emplace_back("no sources");

  bool ring_ok = true;
  for (std::size_t m = 0; m < scene.mic_positions.size(); ++m) {
    const auto& mic = scene.mic_positions[m];
    if (!inside_with_clearance(mic, scene.room_dims, config.wall_clearance)) {
      violations.emplace_back("mic " + std::to_string(m) + " outside clearance");
    }
    if (std::abs(distance(mic, scene.array_center) - scene.array_radius) > kRadiusTolerance) {
      ring_ok = false;
    }
  }
  if (!ring_ok) violations.emplace_back("mic ring radius mismatch");

  for (std::size_t k = 0; k < scene.source_positions.size(); ++k) {
    const auto& src = scene.source_positions[k];
    if (!inside_with_clearance(src, scene.room_dims, config.wall_clearance)) {
      violations.emplace_back("source " + std::to_string(k) + " outside clearance");
      continue;
    }
    const double d = distance(src, scene.array_center);
    if (d < config.source_distance.low - kRadiusTolerance ||
        d > config.source_distance.high + kRadiusTolerance) {
      violations.emplace_back("source " + std::to_string(k) + " distance out of range");
    }
  }
  if (!(scene.t60 > 0.0)) violations.emplace_back("t60 not positive");
  if (std::isnan(scene.snr)) violations.emplace_back("snr not defined");
  return violations;
}

void to_json(nlohmann::json& j, const Range& range) { j = nlohmann::json::array({range.low, range.high}); }

void from_json(const nlohmann::json& j, Range& range) {
  if (!j.is_array() || j.size() != 2) throw DataError("range must be a [low, high] array");
  range.low = j.at(0).get<double>();
  range.high = j.at(1).get<double>();
}

void to_json(nlohmann::json& j, const GeometryConfig& c) {
  j = nlohmann::json{{"room_length_m", c.room_length},
                     {"room_width_m", c.room_width},
                     {"room_height_m", c.room_height},
                     {"array_x_m", c.array_x},
                     {"array_y_m", c.array_y},
                     {"array_z_m", c.array_z},
                     {"array_radius_m", c.array_radius},
                     {"num_mics", c.num_mics},
                     {"num_sources", c.num_sources},
                     {"source_distance_m", c.source_distance},
                     {"source_height_m", c.source_height},
                     {"t60_s", c.t60},
                     {"snr_db", c.snr},
                     {"tilt_max_rad", c.tilt_max},
                     {"sample_rate_hz", c.sample_rate},
                     {"wall_clearance_m", c.wall_clearance},
                     {"max_attempts", c.max_attempts}};
}

void from_json(const nlohmann::json& j, GeometryConfig& c) {
  read_optional(j, "room_length_m", c.room_length);
  read_optional(j, "room_width_m", c.room_width);
  read_optional(j, "room_height_m", c.room_height);
  read_optional(j, "array_x_m", c.array_x);
  read_optional(j, "array_y_m", c.array_y);
  read_optional(j, "array_z_m", c.array_z);
  read_optional(j, "array_radius_m", c.array_radius);
  read_optional(j, "num_mics", c.num_mics);
  read_optional(j, "num_sources", c.num_sources);
  read_optional(j, "source_distance_m", c.source_distance);
  read_optional(j, "source_height_m", c.source_height);
  read_optional(j, "t60_s", c.t60);
  read_optional(j, "snr_db", c.snr);
  read_optional(j, "tilt_max_rad", c.tilt_max);
  read_optional(j, "sample_rate_hz", c.sample_rate);
  read_optional(j, "wall_clearance_m", c.wall_clearance);
  read_optional(j, "max_attempts", c.max_attempts);
}

void to_json(nlohmann::json& j, const SceneGeometry& s) {
  j = nlohmann::json{{"scene_id", s.scene_id},
                     {"seed", s.seed},
                     {"room_dims_m", s.room_dims},
                     {"array_center_m", s.array_center},
                     {"array_rotation_rad", s.array_rotation},
                     {"array_radius_m", s.array_radius},
                     {"mic_positions_m", s.mic_positions},
                     {"source_positions_m", s.source_positions},
                     {"t60_s", s.t60},
                     {"snr_db", s.snr},
                     {"sample_rate_hz", s.sample_rate}};
}

void from_json(const nlohmann::json& j, SceneGeometry& s) {
  j.at("scene_id").get_to(s.scene_id);
  j.at("seed").get_to(s.seed);
  j.at("room_dims_m").get_to(s.room_dims);
  j.at("array_center_m").get_to(s.array_center);
  j.at("array_rotation_rad").get_to(s.array_rotation);
  j.at("array_radius_m").get_to(s.array_radius);
  j.at("mic_positions_m").get_to(s.mic_positions);
  j.at("source_positions_m").get_to(s.source_positions);
  j.at("t60_s").get_to(s.t60);
  // +inf SNR is stored as null since JSON has no infinity.
  s.snr = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity() : j.at("snr_db").get<double>();
  j.at("sample_rate_hz").get_to(s.sample_rate);
}

}  // namespace mixlab
