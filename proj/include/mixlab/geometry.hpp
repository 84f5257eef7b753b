#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixlab {

using Vec3 = std::array<double, 3>;

struct Range {
  double low = 0.0;
  double high = 0.0;
};

/// Sampling ranges for randomized scenes. Lengths in meters, angles in
/// radians, T60 in seconds, SNR in dB. Horizontal array placement is measured
/// from the room corner at the origin.
struct GeometryConfig {
  Range room_length{7.6, 8.4};
  Range room_width{5.6, 6.4};
  Range room_height{2.6, 3.4};
  Range array_x{3.6, 4.4};
  Range array_y{2.6, 3.4};
  Range array_z{1.0, 1.5};
  double array_radius = 0.10;
  int num_mics = 6;
  int num_sources = 2;
  Range source_distance{1.0, 2.0};
  Range source_height{1.4, 1.9};
  Range t60{0.2, 0.5};
  Range snr{20.0, 30.0};
  double tilt_max = 0.1;
  double sample_rate = 8000.0;
  double wall_clearance = 0.1;
  int max_attempts = 1000;
};

/// Throws std::invalid_argument when a config invariant is violated.
void validate_config(const GeometryConfig& config);

struct SceneGeometry {
  std::string scene_id;
  std::uint64_t seed = 0;
  Vec3 room_dims{};
  Vec3 array_center{};
  /// Rotation angles about x, y, z; applied as Rz * Ry * Rx.
  Vec3 array_rotation{};
  double array_radius = 0.0;
  std::vector<Vec3> mic_positions;
  std::vector<Vec3> source_positions;
  double t60 = 0.0;
  double snr = 0.0;
  double sample_rate = 8000.0;
};

/// Draws one scene. Sampling order is fixed: room length, width, height;
/// array center x, y, z; rotation z, tilt x, tilt y; then per source
/// distance, azimuth, height (redrawn as a triple on rejection); then T60 and
/// SNR. The distance is the 3-D distance to the array center.
///
/// Throws NumericalError if no admissible source placement is found within
/// config.max_attempts draws.
[[nodiscard]] SceneGeometry sample_scene(const GeometryConfig& config, std::uint64_t seed);

/// Human-readable invariant violations; empty iff the scene is valid. A
/// source outside the wall clearance is reported once and not additionally
/// range-checked.
[[nodiscard]] std::vector<std::string> validate_scene(const SceneGeometry& scene,
                                                      const GeometryConfig& config = {});

[[nodiscard]] std::array<std::array<double, 3>, 3> rotation_matrix(const Vec3& angles);
[[nodiscard]] double distance(const Vec3& a, const Vec3& b);

void to_json(nlohmann::json& j, const Range& range);
void from_json(const nlohmann::json& j, Range& range);
void to_json(nlohmann::json& j, const GeometryConfig& config);
void from_json(const nlohmann::json& j, GeometryConfig& config);
void to_json(nlohmann::json& j, const SceneGeometry& scene);
void from_json(const nlohmann::json& j, SceneGeometry& scene);

}  // namespace mixlab
