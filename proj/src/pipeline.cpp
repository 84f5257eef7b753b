#include "mixlab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mixlab/error.hpp"
#include "mixlab/io.hpp"
#include "mixlab/random.hpp"

namespace mixlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::string reflection_model_name(ReflectionModel model) {
  return model == ReflectionModel::kSabine ? "sabine" : "decay_matched";
}

ReflectionModel parse_reflection_model(const std::string& name) {
  if (name == "sabine") return ReflectionModel::kSabine;
  if (name == "decay_matched") return ReflectionModel::kDecayMatched;
  throw DataError("unknown reflection model '" + name + "'");
}

template <typename T>
void read_optional(const json& j, const char* key, T& value) {
  if (j.contains(key)) j.at(key).get_to(value);
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6f", value);
  return buffer;
}

json summary_json(const MetricSummary& s) {
  return json{{"mean_db", std::isfinite(s.mean) ? json(s.mean) : json(nullptr)},
              {"count", s.count},
              {"nonfinite", s.nonfinite}};
}

std::string image_file(const std::string& kind, std::size_t k) {
  return kind + "_" + std::to_string(k) + ".wav";
}

void write_scene_files(const fs::path& dir, const SimulatedScene& scene) {
  const auto& b = scene.bundle;
  fs::create_directories(dir);
  write_wav(dir / "observation.wav", b.y, b.sample_rate);
  write_wav(dir / "noise.wav", b.n, b.sample_rate);
  for (std::size_t k = 0; k < b.num_sources(); ++k) {
    write_wav(dir / image_file("source", k), MultiSignal{b.s[k]}, b.sample_rate);
    write_wav(dir / image_file("speech_image", k), b.x[k], b.sample_rate);
    write_wav(dir / image_file("speech_image_early", k), b.x_early[k], b.sample_rate);
    write_wav(dir / image_file("speech_image_late", k), b.x_late[k], b.sample_rate);
    write_wav(dir / image_file("rir", k), scene.rirs.h[k], b.sample_rate);
  }
}

json scene_entry(const std::string& id, const SimulatedScene& scene) {
  const auto& b = scene.bundle;
  json files{{"observation", id + "/observation.wav"}, {"noise", id + "/noise.wav"}};
  for (const char* kind : {"source", "speech_image", "speech_image_early", "speech_image_late", "rir"}) {
    json list = json::array();
    for (std::size_t k = 0; k < b.num_sources(); ++k) list.push_back(id + "/" + image_file(kind, k));
    files[kind] = list;
  }
  return json{{"scene_id", id},
              {"seed", scene.seed},
              {"geometry", scene.geometry},
              {"t60_s", scene.geometry.t60},
              {"snr_db", scene.geometry.snr},
              {"offsets", b.offset},
              {"num_samples", b.length()},
              {"sample_rate_hz", b.sample_rate},
              {"reflection_coefficient", scene.rirs.reflection_coefficient},
              {"rir_start_sample", scene.rirs.start_sample},
              {"rir_early_end", scene.rirs.early_end},
              {"files", files}};
}

std::vector<fs::path> list_wavs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("source directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Signal load_mono(const fs::path& path, double sample_rate) {
  auto wav = read_wav(path);
  if (wav.channels.size() != 1) throw DataError(path.string() + ": source files must be mono");
  if (wav.sample_rate != sample_rate) return resample(wav.channels.front(), wav.sample_rate, sample_rate);
  return std::move(wav.channels.front());
}

MultiSignal read_channels(const fs::path& path, double sample_rate) {
  auto wav = read_wav(path);
  if (wav.sample_rate != sample_rate) throw DataError(path.string() + ": unexpected sample rate");
  return std::move(wav.channels);
}

fs::path dataset_dir_of(const fs::path& manifest) {
  const auto parent = manifest.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

const char* operator_kind(Method method) {
  switch (method) {
    case Method::kObservation: return "select";
    case Method::kCacgmmMask: return "mask";
    default: return "beamformer";
  }
}

// Reconstructs the per-estimate operators written by separate_dataset().
std::vector<std::unique_ptr<LinearOperator>> load_operators(const fs::path& dir, std::size_t speakers) {
  const auto path = dir / "operator.json";
  if (!fs::exists(path)) return {};
  const json spec = json::parse(read_text(path));
  const std::string kind = spec.at("kind");
  const auto references = spec.at("reference_channels").get<std::vector<std::size_t>>();
  if (references.size() != speakers) throw DataError(path.string() + ": operator count mismatch");
  std::vector<std::unique_ptr<LinearOperator>> ops;
  if (kind == "select") {
    for (std::size_t k = 0; k < speakers; ++k) ops.push_back(std::make_unique<MaskOp>(references[k]));
  } else if (kind == "mask") {
    const auto masks = read_npy_float(dir / spec.at("masks").get<std::string>());
    if (masks.shape.size() != 3 || masks.shape[0] < speakers) throw DataError("masks.npy: unexpected shape");
    const std::size_t T = masks.shape[1];
    const std::size_t F = masks.shape[2];
    for (std::size_t k = 0; k < speakers; ++k) {
      std::vector<double> mask(masks.data.begin() + static_cast<std::ptrdiff_t>(k * T * F),
                               masks.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * T * F));
      ops.push_back(std::make_unique<MaskOp>(std::move(mask), T, F, references[k]));
    }
  } else if (kind == "beamformer") {
    const auto weights = read_npy_complex(dir / spec.at("weights").get<std::string>());
    if (weights.shape.size() != 3 || weights.shape[0] != speakers) throw DataError("weights.npy: unexpected shape");
    const std::size_t F = weights.shape[1];
    const std::size_t D = weights.shape[2];
    for (std::size_t k = 0; k < speakers; ++k) {
      std::vector<Eigen::VectorXcd> w(F, Eigen::VectorXcd(static_cast<Eigen::Index>(D)));
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t d = 0; d < D; ++d) w[f](static_cast<Eigen::Index>(d)) = weights.data[(k * F + f) * D + d];
      }
      ops.push_back(std::make_unique<BeamformerOp>(std::move(w)));
    }
  } else {
    throw DataError(path.string() + ": unknown operator kind '" + kind + "'");
  }
  return ops;
}

void write_separation(const fs::path& dir, const Separation& sep, Method method, double sample_rate,
                      const StftConfig& stft) {
  fs::create_directories(dir);
  const std::size_t K = sep.estimates.size();
  for (std::size_t k = 0; k < K; ++k) {
    write_wav(dir / image_file("estimate", k), MultiSignal{sep.estimates[k]}, sample_rate);
  }
  json spec{{"method", std::string(to_string(method))},
            {"kind", operator_kind(method)},
            {"stft", {{"size", stft.size}, {"dft_size", stft.dft_size}, {"shift", stft.shift}}}};
  std::vector<std::size_t> references(K, 0);
  if (sep.masks) {
    const auto& m = *sep.masks;
    std::vector<float> data(m.data().begin(), m.data().end());
    write_npy(dir / "masks.npy", data, {m.classes(), m.frames(), m.bins()});
    spec["masks"] = "masks.npy";
  }
  if (!sep.beamformers.empty()) {
    const std::size_t F = sep.beamformers.front().weights.size();
    const auto D = static_cast<std::size_t>(sep.beamformers.front().weights.front().size());
    std::vector<std::complex<double>> data;
    data.reserve(K * F * D);
    for (std::size_t k = 0; k < K; ++k) {
      references[k] = sep.beamformers[k].reference;
      for (const auto& w : sep.beamformers[k].weights) data.insert(data.end(), w.data(), w.data() + w.size());
    }
    write_npy(dir / "weights.npy", data, {K, F, D});
    spec["weights"] = "weights.npy";
  }
  spec["reference_channels"] = references;
  if (!sep.log_likelihood.empty()) spec["log_likelihood"] = sep.log_likelihood;
  write_text_atomic(dir / "operator.json", spec.dump(2) + "\n");
}

struct SystemInfo {
  int order;
  std::string label;
};

SystemInfo system_info(const std::string& method) {
  static const std::map<std::string, SystemInfo> known{
      {"observation", {0, "Observation"}},
      {"cacgmm-mask", {1, "cACGMM, Masking"}},
      {"cacgmm-mvdr", {2, "cACGMM, MVDR"}},
      {"irm-mvdr", {3, "IRM, MVDR (oracle)"}},
      {"ibm-mvdr", {4, "IBM, MVDR (oracle)"}},
  };
  const auto it = known.find(method);
  return it != known.end() ? it->second : SystemInfo{5, method};
}

}  // namespace

void validate(const DatasetConfig& config) {
  validate_config(config.geometry);
  validate(config.synthetic);
  validate(config.stft);
  if (config.em_iterations == 0) throw std::invalid_argument("em_iterations must be >= 1");
  if (config.geometry.num_mics < 2) throw std::invalid_argument("separation needs at least two microphones");
}

void to_json(json& j, const DatasetConfig& c) {
  j = json{{"geometry", c.geometry},
           {"synthetic", c.synthetic},
           {"rir",
            {{"max_order", c.rir.max_order},
             {"rir_length", c.rir.rir_length},
             {"sound_speed_mps", c.rir.sound_speed},
             {"kernel_taps", c.rir.kernel_taps},
             {"early_window_s", c.rir.early_window_s},
             {"reflection_model", reflection_model_name(c.rir.reflection_model)},
             {"high_pass", c.rir.high_pass}}},
           {"stft", {{"size", c.stft.size}, {"dft_size", c.stft.dft_size}, {"shift", c.stft.shift}}},
           {"em_iterations", c.em_iterations}};
}

void from_json(const json& j, DatasetConfig& c) {
  if (j.contains("geometry")) j.at("geometry").get_to(c.geometry);
  if (j.contains("synthetic")) j.at("synthetic").get_to(c.synthetic);
  if (j.contains("rir")) {
    const auto& r = j.at("rir");
    read_optional(r, "max_order", c.rir.max_order);
    read_optional(r, "rir_length", c.rir.rir_length);
    read_optional(r, "sound_speed_mps", c.rir.sound_speed);
    read_optional(r, "kernel_taps", c.rir.kernel_taps);
    read_optional(r, "early_window_s", c.rir.early_window_s);
    read_optional(r, "high_pass", c.rir.high_pass);
    if (r.contains("reflection_model")) c.rir.reflection_model = parse_reflection_model(r.at("reflection_model"));
  }
  if (j.contains("stft")) {
    const auto& s = j.at("stft");
    read_optional(s, "size", c.stft.size);
    read_optional(s, "dft_size", c.stft.dft_size);
    read_optional(s, "shift", c.stft.shift);
  }
  read_optional(j, "em_iterations", c.em_iterations);
  c.stft.sample_rate = c.geometry.sample_rate;
}

DatasetConfig load_config(const fs::path& path) {
  try {
    return json::parse(read_text(path)).get<DatasetConfig>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

std::string scene_name(std::size_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "scene_%04zu", index);
  return buffer;
}

SimulatedScene simulate_scene(const DatasetConfig& config, std::uint64_t master_seed, std::size_t index,
                              const std::vector<fs::path>& source_files) {
  const std::uint64_t scene_seed = Rng::mix(master_seed, static_cast<std::uint64_t>(index));
  SimulatedScene scene;
  scene.geometry = sample_scene(config.geometry, Rng::mix(scene_seed, "geometry"));
  scene.geometry.scene_id = scene_name(index);
  scene.seed = scene_seed;

  const auto K = static_cast<std::size_t>(config.geometry.num_sources);
  MultiSignal sources;
  Rng rng = Rng::derive(scene_seed, "sources");
  if (source_files.empty()) {
    for (std::size_t k = 0; k < K; ++k) sources.push_back(synthetic_speech(config.synthetic, config.geometry.sample_rate, rng));
  } else {
    if (source_files.size() < K) throw DataError("not enough source files for " + std::to_string(K) + " speakers");
    std::vector<std::size_t> chosen;
    while (chosen.size() < K) {
      const auto pick = static_cast<std::size_t>(rng.uniform_int(0, source_files.size() - 1));
      if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end()) chosen.push_back(pick);
    }
    for (const auto pick : chosen) sources.push_back(load_mono(source_files[pick], config.geometry.sample_rate));
  }

  scene.rirs = simulate_rir(scene.geometry, config.rir);
  scene.bundle = build_scene_bundle(scene.geometry, sources, Rng::mix(scene_seed, "mixture"), scene.rirs);
  return scene;
}

json generate_dataset(const GenerateOptions& options) {
  validate(options.config);
  if (options.count == 0) throw UsageError("--count must be at least 1");
  std::error_code ec;
  fs::create_directories(options.out, ec);
  if (ec || !fs::is_directory(options.out)) throw DataError("cannot create output directory " + options.out.string());

  const auto source_files = options.source_dir.empty() ? std::vector<fs::path>{} : list_wavs(options.source_dir);
  if (!options.source_dir.empty() && source_files.empty()) {
    throw DataError("no .wav files in " + options.source_dir.string());
  }

  std::vector<json> entries(options.count);
  parallel_for(options.count, options.jobs, [&](std::size_t i) {
    const auto scene = simulate_scene(options.config, options.seed, i, source_files);
    const auto id = scene_name(i);
    write_scene_files(options.out / id, scene);
    entries[i] = scene_entry(id, scene);
    write_text_atomic(options.out / id / "scene.json", entries[i].dump(2) + "\n");
  });

  json manifest{{"version", kManifestVersion},
                {"master_seed", options.seed},
                {"config", options.config},
                {"snr_reference", "mean power of the sum of speech images over all channels and samples"},
                {"sources", options.source_dir.empty() ? "synthetic" : "files"},
                {"scenes", entries}};
  write_text_atomic(options.out / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

json load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("manifest " + path.string() + " not found");
  try {
    auto manifest = json::parse(read_text(path));
    if (manifest.value("version", 0) != kManifestVersion) throw DataError(path.string() + ": unsupported version");
    if (!manifest.contains("scenes") || !manifest.at("scenes").is_array()) {
      throw DataError(path.string() + ": no scene list");
    }
    return manifest;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

MixtureBundle load_bundle(const fs::path& dataset_dir, const json& entry, bool require_components) {
  const auto& files = entry.at("files");
  const double fs_hz = entry.at("sample_rate_hz");
  MixtureBundle b;
  b.sample_rate = fs_hz;
  b.snr = entry.at("snr_db").is_null() ? std::numeric_limits<double>::infinity() : entry.at("snr_db").get<double>();
  b.offset = entry.at("offsets").get<std::vector<std::size_t>>();
  b.y = read_channels(dataset_dir / files.at("observation").get<std::string>(), fs_hz);
  for (const auto& f : files.at("source")) {
    b.s.push_back(read_channels(dataset_dir / f.get<std::string>(), fs_hz).front());
  }
  const auto load_images = [&](const char* key, std::vector<MultiSignal>& target) {
    for (const auto& f : files.at(key)) {
      const auto path = dataset_dir / f.get<std::string>();
      if (!fs::exists(path)) {
        if (require_components) throw DataError("missing image file " + path.string());
        target.clear();
        return;
      }
      target.push_back(read_channels(path, fs_hz));
    }
  };
  load_images("speech_image", b.x);
  load_images("speech_image_early", b.x_early);
  load_images("speech_image_late", b.x_late);
  const auto noise = dataset_dir / files.at("noise").get<std::string>();
  if (fs::exists(noise)) {
    b.n = read_channels(noise, fs_hz);
  } else if (require_components) {
    throw DataError("missing noise file " + noise.string());
  }
  return b;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kObservation: return "observation";
    case Method::kCacgmmMask: return "cacgmm-mask";
    case Method::kCacgmmMvdr: return "cacgmm-mvdr";
    case Method::kIrmMvdr: return "irm-mvdr";
    case Method::kIbmMvdr: return "ibm-mvdr";
  }
  return "observation";
}

Method parse_method(std::string_view name) {
  for (const auto m : {Method::kObservation, Method::kCacgmmMask, Method::kCacgmmMvdr, Method::kIrmMvdr,
                       Method::kIbmMvdr}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool is_oracle(Method method) { return method == Method::kIrmMvdr || method == Method::kIbmMvdr; }

Separation separate_scene(const MixtureBundle& bundle, Method method, const DatasetConfig& config,
                          std::uint64_t seed) {
  const std::size_t K = bundle.num_sources();
  if (K == 0) throw DataError("separate_scene: no speakers");
  Separation sep;
  const TfTensor Y = analyze(bundle.y, config.stft);
  const auto finish = [&](const LinearOperator& op) {
    sep.estimates.push_back(synthesize(op.apply(Y), config.stft).front());
  };

  if (method == Method::kObservation) {
    for (std::size_t k = 0; k < K; ++k) {
      sep.operators.push_back(std::make_unique<MaskOp>(0));
      finish(*sep.operators.back());
    }
    return sep;
  }

  if (is_oracle(method)) {
    if (bundle.x.size() != K || bundle.n.empty()) throw DataError("oracle masks need speech images and noise");
    std::vector<TfTensor> images;
    for (const auto& x : bundle.x) images.push_back(analyze(x, config.stft));
    sep.masks = oracle_masks(images, analyze(bundle.n, config.stft),
                             method == Method::kIrmMvdr ? OracleMask::kIrm : OracleMask::kIbm);
  } else {
    CacgmmOptions options;
    options.iterations = config.em_iterations;
    options.seed = Rng::mix(seed, "cacgmm");
    auto fit = fit_cacgmm(Y, K, options);
    sep.masks = std::move(fit.masks);
    sep.log_likelihood = std::move(fit.log_likelihood);
  }
  // Masks are persisted as float32; round them here so that the stored
  // operator reproduces the estimate exactly.
  for (double& v : sep.masks->data()) v = static_cast<double>(static_cast<float>(v));

  for (std::size_t k = 0; k < K; ++k) {
    if (method == Method::kCacgmmMask) {
      sep.operators.push_back(std::make_unique<MaskOp>(class_mask(*sep.masks, k), Y.frames(), Y.bins(), 0));
    } else {
      auto solution = mvdr_with_reference_selection(estimate_covariances(Y, *sep.masks, k));
      sep.operators.push_back(std::make_unique<BeamformerOp>(solution.weights));
      sep.beamformers.push_back(std::move(solution));
    }
    finish(*sep.operators.back());
  }
  return sep;
}

json separate_dataset(const SeparateOptions& options) {
  const json manifest = load_manifest(options.manifest);
  const DatasetConfig config = manifest.at("config").get<DatasetConfig>();
  const fs::path dataset = dataset_dir_of(options.manifest);
  const auto& scenes = manifest.at("scenes");
  std::error_code ec;
  fs::create_directories(options.out, ec);
  if (ec || !fs::is_directory(options.out)) throw DataError("cannot create output directory " + options.out.string());

  std::vector<json> status(scenes.size());
  std::mutex log_mutex;
  parallel_for(scenes.size(), options.jobs, [&](std::size_t i) {
    const auto& entry = scenes[i];
    const std::string id = entry.at("scene_id");
    const auto bundle = load_bundle(dataset, entry, is_oracle(options.method));
    try {
      const auto sep = separate_scene(bundle, options.method, config, entry.at("seed").get<std::uint64_t>());
      write_separation(options.out / id, sep, options.method, bundle.sample_rate, config.stft);
      status[i] = json{{"scene_id", id}, {"status", "ok"}};
    } catch (const NumericalError& e) {
      const std::lock_guard lock(log_mutex);
      std::clog << "separate: skipping " << id << ": " << e.what() << "\n";
      status[i] = json{{"scene_id", id}, {"status", "failed"}, {"error", e.what()}};
    }
  });

  std::size_t failed = 0;
  for (const auto& s : status) failed += s.at("status") == "failed" ? 1 : 0;
  json summary{{"method", std::string(to_string(options.method))},
               {"scenes", status},
               {"failed", failed}};
  write_text_atomic(options.out / "separation.json", summary.dump(2) + "\n");
  return summary;
}

json evaluate_dataset(const EvaluateOptions& options) {
  const json manifest = load_manifest(options.manifest);
  const DatasetConfig config = manifest.at("config").get<DatasetConfig>();
  const fs::path dataset = dataset_dir_of(options.manifest);
  const auto separation_path = options.estimates / "separation.json";
  if (!fs::exists(separation_path)) throw DataError("no separation.json in " + options.estimates.string());
  const json separation = json::parse(read_text(separation_path));
  const std::string method = separation.value("method", "unknown");

  const auto& scenes = manifest.at("scenes");
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (fs::exists(options.estimates / scenes[i].at("scene_id").get<std::string>() / "estimate_0.wav")) todo.push_back(i);
  }
  if (todo.empty()) throw DataError("no estimates found in " + options.estimates.string());

  std::vector<BundleEvaluation> results(todo.size());
  std::vector<bool> has_invasive(todo.size(), false);
  parallel_for(todo.size(), options.jobs, [&](std::size_t n) {
    const auto& entry = scenes[todo[n]];
    const std::string id = entry.at("scene_id");
    const auto bundle = load_bundle(dataset, entry, true);
    const auto dir = options.estimates / id;
    MultiSignal estimates;
    for (std::size_t k = 0; k < bundle.num_sources(); ++k) {
      const auto path = dir / image_file("estimate", k);
      if (!fs::exists(path)) throw DataError("missing estimate " + path.string());
      estimates.push_back(read_channels(path, bundle.sample_rate).front());
    }
    const auto ops = load_operators(dir, bundle.num_sources());
    std::vector<const LinearOperator*> raw;
    for (const auto& op : ops) raw.push_back(op.get());
    EvaluationOptions eval;
    eval.reference = options.reference;
    eval.stft = config.stft;
    results[n] = evaluate_bundle(bundle, estimates, eval, ops.empty() ? nullptr : &raw);
    has_invasive[n] = !ops.empty();
  });

  std::ostringstream csv;
  csv << "scene_id,speaker,estimate,reference,sdr_db,si_sdr_db,bss_eval_sdr_db,invasive_sdr_db\n";
  std::vector<double> sdr_values, si_values, bss_values, invasive_values;
  bool all_invasive = true;
  for (std::size_t n = 0; n < todo.size(); ++n) {
    const std::string id = scenes[todo[n]].at("scene_id");
    all_invasive = all_invasive && has_invasive[n];
    for (const auto& row : results[n].rows) {
      csv << id << ',' << row.speaker << ',' << row.estimate << ',' << to_string(options.reference) << ','
          << format_number(row.sdr) << ',' << format_number(row.si_sdr) << ',' << format_number(row.bss_eval_sdr)
          << ',' << (row.invasive_sdr ? format_number(*row.invasive_sdr) : "") << '\n';
      sdr_values.push_back(row.sdr);
      si_values.push_back(row.si_sdr);
      bss_values.push_back(row.bss_eval_sdr);
      if (row.invasive_sdr) invasive_values.push_back(*row.invasive_sdr);
    }
  }

  json metrics{{"sdr", summary_json(summarize(sdr_values))},
               {"si_sdr", summary_json(summarize(si_values))},
               {"bss_eval_sdr", summary_json(summarize(bss_values))},
               {"invasive_sdr", all_invasive ? summary_json(summarize(invasive_values)) : json(nullptr)}};
  json summary{{"method", method},
               {"reference", std::string(to_string(options.reference))},
               {"scenes", todo.size()},
               {"rows", sdr_values.size()},
               {"metrics", metrics}};

  std::error_code ec;
  fs::create_directories(options.out, ec);
  if (ec || !fs::is_directory(options.out)) throw DataError("cannot create output directory " + options.out.string());
  write_text_atomic(options.out / "rows.csv", csv.str());
  write_text_atomic(options.out / "summary.json", summary.dump(2) + "\n");
  return summary;
}

std::string render_report(const std::vector<json>& summaries) {
  if (summaries.empty()) throw UsageError("report needs at least one evaluation");
  std::vector<const json*> rows;
  for (const auto& s : summaries) rows.push_back(&s);
  std::stable_sort(rows.begin(), rows.end(), [](const json* a, const json* b) {
    return system_info(a->value("method", "")).order < system_info(b->value("method", "")).order;
  });

  const auto cell = [](const json& metric) -> std::string {
    if (metric.is_null() || metric.at("mean_db").is_null()) return "n/a";
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.2f", metric.at("mean_db").get<double>());
    return buffer;
  };
  std::ostringstream out;
  out << "| System | Reference | BSS-Eval SDR [dB] | Invasive SDR [dB] |\n";
  out << "|---|---|---:|---:|\n";
  for (const json* row : rows) {
    const auto& metrics = row->at("metrics");
    out << "| " << system_info(row->value("method", "")).label << " | " << row->value("reference", "") << " | "
        << cell(metrics.at("bss_eval_sdr")) << " | " << cell(metrics.value("invasive_sdr", json(nullptr))) << " |\n";
  }
  return out.str();
}

}  // namespace mixlab
