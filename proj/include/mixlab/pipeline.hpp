#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixlab/beamformer.hpp"
#include "mixlab/cacgmm.hpp"
#include "mixlab/geometry.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/mixer.hpp"
#include "mixlab/rir.hpp"
#include "mixlab/stft.hpp"
#include "mixlab/synthetic.hpp"

namespace mixlab {

/// Everything a dataset run can be configured with. Every field has a
/// default, and every JSON key is optional.
struct DatasetConfig {
  GeometryConfig geometry;
  SyntheticSourceConfig synthetic;
  RirOptions rir;
  StftConfig stft;
  std::size_t em_iterations = 100;
};

void validate(const DatasetConfig& config);
void to_json(nlohmann::json& j, const DatasetConfig& config);
void from_json(const nlohmann::json& j, DatasetConfig& config);
/// Reads a JSON config file; throws DataError on parse failure.
[[nodiscard]] DatasetConfig load_config(const std::filesystem::path& path);

/// Runs fn(0..count-1) on up to `jobs` threads. The first exception (by
/// index) is rethrown after all work has finished.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct SimulatedScene {
  /// Root of every random stream of the scene.
  std::uint64_t seed = 0;
  SceneGeometry geometry;
  RirSet rirs;
  MixtureBundle bundle;
};

/// Scene `index` of the dataset with `master_seed`. With an empty
/// `source_files` list the sources are synthetic; otherwise distinct files
/// are drawn from the list.
[[nodiscard]] SimulatedScene simulate_scene(const DatasetConfig& config, std::uint64_t master_seed, std::size_t index,
                                            const std::vector<std::filesystem::path>& source_files = {});

[[nodiscard]] std::string scene_name(std::size_t index);

struct GenerateOptions {
  DatasetConfig config;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  std::size_t jobs = 1;
  /// Directory of mono WAV files; empty for synthetic sources.
  std::filesystem::path source_dir;
  std::filesystem::path out;
};

/// Writes scene folders and, last, manifest.json. Returns the manifest.
nlohmann::json generate_dataset(const GenerateOptions& options);

/// Reads a scene's signals back from the files listed in its manifest entry.
/// Image and noise files are optional unless `require_components` is set.
[[nodiscard]] MixtureBundle load_bundle(const std::filesystem::path& dataset_dir, const nlohmann::json& entry,
                                        bool require_components);

[[nodiscard]] nlohmann::json load_manifest(const std::filesystem::path& path);

enum class Method { kObservation, kCacgmmMask, kCacgmmMvdr, kIrmMvdr, kIbmMvdr };

[[nodiscard]] std::string_view to_string(Method method);
/// Throws std::invalid_argument for unknown names.
[[nodiscard]] Method parse_method(std::string_view name);
[[nodiscard]] bool is_oracle(Method method);

/// Result of separating one scene. operators[k] maps the multi-channel STFT
/// of the observation (or of any of its components) to estimate k.
struct Separation {
  MultiSignal estimates;
  std::vector<std::unique_ptr<LinearOperator>> operators;
  std::optional<MaskSet> masks;
  std::vector<BeamformerSolution> beamformers;
  std::vector<double> log_likelihood;
};

/// Oracle methods need bundle.x and bundle.n; blind methods use bundle.y only.
[[nodiscard]] Separation separate_scene(const MixtureBundle& bundle, Method method, const DatasetConfig& config,
                                        std::uint64_t seed);

struct SeparateOptions {
  std::filesystem::path manifest;
  Method method = Method::kCacgmmMvdr;
  std::filesystem::path out;
  std::size_t jobs = 1;
};

/// Writes per-scene estimates and operator dumps plus separation.json.
/// Scenes whose separation fails numerically are skipped and listed.
nlohmann::json separate_dataset(const SeparateOptions& options);

struct EvaluateOptions {
  std::filesystem::path manifest;
  std::filesystem::path estimates;
  ReferenceKind reference = ReferenceKind::kSource;
  std::filesystem::path out;
  std::size_t jobs = 1;
};

/// Writes rows.csv and summary.json into options.out. Returns the summary.
nlohmann::json evaluate_dataset(const EvaluateOptions& options);

/// Markdown table with one row per evaluation summary, in the fixed system
/// order observation, masking, MVDR, oracle rows.
[[nodiscard]] std::string render_report(const std::vector<nlohmann::json>& summaries);

}  // namespace mixlab
