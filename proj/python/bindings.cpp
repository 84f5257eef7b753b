// Python bindings for the mixlab core. Configs and scene geometry cross the
// boundary as JSON strings; signals as NumPy arrays.

#include <complex>
#include <cstring>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "mixlab/beamformer.hpp"
#include "mixlab/cacgmm.hpp"
#include "mixlab/error.hpp"
#include "mixlab/geometry.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/pipeline.hpp"
#include "mixlab/rir.hpp"
#include "mixlab/stft.hpp"

namespace py = pybind11;
using namespace mixlab;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

DatasetConfig parse_config(const std::string& text) {
  return text.empty() ? DatasetConfig{} : nlohmann::json::parse(text).get<DatasetConfig>();
}

MultiSignal to_channels(const RealArray& array) {
  if (array.ndim() == 1) {
    return {Signal(array.data(), array.data() + array.shape(0))};
  }
  if (array.ndim() != 2) throw std::invalid_argument("expected a (channels, samples) array");
  MultiSignal out;
  const auto n = static_cast<std::size_t>(array.shape(1));
  for (py::ssize_t c = 0; c < array.shape(0); ++c) {
    const double* row = array.data(c, 0);
    out.emplace_back(row, row + n);
  }
  return out;
}

Signal to_signal(const RealArray& array) {
  if (array.ndim() != 1) throw std::invalid_argument("expected a 1-D signal");
  return {array.data(), array.data() + array.shape(0)};
}

RealArray from_channels(const MultiSignal& channels) {
  const std::size_t n = channels.empty() ? 0 : channels.front().size();
  RealArray out({channels.size(), n});
  for (std::size_t c = 0; c < channels.size(); ++c) {
    std::memcpy(out.mutable_data(static_cast<py::ssize_t>(c), 0), channels[c].data(), n * sizeof(double));
  }
  return out;
}

template <typename Matrix, typename Array>
Matrix to_matrix(const Array& array) {
  if (array.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const auto view = array.template unchecked<2>();
  Matrix out(view.shape(0), view.shape(1));
  for (py::ssize_t i = 0; i < view.shape(0); ++i) {
    for (py::ssize_t j = 0; j < view.shape(1); ++j) out(i, j) = view(i, j);
  }
  return out;
}

RealArray from_stack(const std::vector<MultiSignal>& stack) {
  const std::size_t d = stack.empty() ? 0 : stack.front().size();
  const std::size_t n = d == 0 ? 0 : stack.front().front().size();
  RealArray out({stack.size(), d, n});
  for (std::size_t k = 0; k < stack.size(); ++k) {
    for (std::size_t c = 0; c < d; ++c) {
      std::memcpy(out.mutable_data(static_cast<py::ssize_t>(k), static_cast<py::ssize_t>(c), 0), stack[k][c].data(),
                  n * sizeof(double));
    }
  }
  return out;
}

ComplexArray from_tensor(const TfTensor& tf) {
  ComplexArray out({tf.channels(), tf.frames(), tf.bins()});
  std::memcpy(out.mutable_data(), tf.data().data(), tf.data().size() * sizeof(std::complex<double>));
  return out;
}

TfTensor to_tensor(const ComplexArray& array, std::size_t signal_length) {
  if (array.ndim() != 3) throw std::invalid_argument("expected a (channels, frames, bins) array");
  TfTensor tf(static_cast<std::size_t>(array.shape(0)), static_cast<std::size_t>(array.shape(1)),
              static_cast<std::size_t>(array.shape(2)), signal_length);
  std::memcpy(tf.data().data(), array.data(), tf.data().size() * sizeof(std::complex<double>));
  return tf;
}

RealArray from_masks(const MaskSet& masks) {
  RealArray out({masks.classes(), masks.frames(), masks.bins()});
  std::memcpy(out.mutable_data(), masks.data().data(), masks.data().size() * sizeof(double));
  return out;
}

StftConfig stft_config(std::size_t size, std::size_t shift) {
  StftConfig config;
  config.size = size;
  config.dft_size = size;
  config.shift = shift;
  validate(config);
  return config;
}

py::dict bundle_dict(const MixtureBundle& b) {
  py::dict d;
  d["s"] = from_channels(b.s);
  d["x"] = from_stack(b.x);
  d["x_early"] = from_stack(b.x_early);
  d["x_late"] = from_stack(b.x_late);
  d["n"] = from_channels(b.n);
  d["y"] = from_channels(b.y);
  d["offset"] = b.offset;
  d["snr"] = b.snr;
  d["sample_rate"] = b.sample_rate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mixlab, m) {
  m.doc() = "Simulated multi-speaker mixtures, cACGMM separation, MVDR beamforming and SDR metrics";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

  m.def("default_config", [] { return nlohmann::json(DatasetConfig{}).dump(); },
        "Default dataset config as a JSON string.");

  m.def(
      "sample_scene",
      [](std::uint64_t seed, const std::string& config) {
        return nlohmann::json(sample_scene(parse_config(config).geometry, seed)).dump();
      },
      py::arg("seed"), py::arg("config") = "", "Scene geometry as a JSON string.");

  m.def(
      "validate_scene",
      [](const std::string& scene) { return validate_scene(nlohmann::json::parse(scene).get<SceneGeometry>()); },
      py::arg("scene"));

  m.def(
      "simulate_rir",
      [](const std::string& scene, const std::string& config) {
        const auto rirs = simulate_rir(nlohmann::json::parse(scene).get<SceneGeometry>(), parse_config(config).rir);
        py::dict d;
        d["h"] = from_stack(rirs.h);
        d["h_early"] = from_stack(rirs.h_early);
        d["h_late"] = from_stack(rirs.h_late);
        d["start_sample"] = rirs.start_sample;
        d["early_end"] = rirs.early_end;
        d["reflection_coefficient"] = rirs.reflection_coefficient;
        return d;
      },
      py::arg("scene"), py::arg("config") = "");

  m.def(
      "simulate_scene",
      [](std::uint64_t master_seed, std::size_t index, const std::string& config) {
        const auto scene = simulate_scene(parse_config(config), master_seed, index);
        auto d = bundle_dict(scene.bundle);
        d["seed"] = scene.seed;
        d["geometry"] = nlohmann::json(scene.geometry).dump();
        return d;
      },
      py::arg("master_seed"), py::arg("index"), py::arg("config") = "",
      "Scene `index` of a dataset: geometry JSON plus s, x, x_early, x_late, n, y arrays.");

  m.def(
      "stft",
      [](const RealArray& signal, std::size_t size, std::size_t shift) {
        return from_tensor(analyze(to_channels(signal), stft_config(size, shift)));
      },
      py::arg("signal"), py::arg("size") = 512, py::arg("shift") = 128,
      "One-sided STFT of a (channels, samples) array, shape (channels, frames, bins).");

  m.def(
      "istft",
      [](const ComplexArray& tf, std::size_t length, std::size_t size, std::size_t shift) {
        const auto config = stft_config(size, shift);
        if (num_frames(length, config) != static_cast<std::size_t>(tf.shape(1))) {
          throw std::invalid_argument("istft: frame count does not match length");
        }
        return from_channels(synthesize(to_tensor(tf, length), config));
      },
      py::arg("tf"), py::arg("length"), py::arg("size") = 512, py::arg("shift") = 128);

  m.def(
      "fit_cacgmm",
      [](const ComplexArray& tf, std::size_t num_speakers, std::size_t iterations, std::uint64_t seed, bool align) {
        CacgmmOptions options;
        options.iterations = iterations;
        options.seed = seed;
        options.align = align;
        const auto result = fit_cacgmm(to_tensor(tf, 0), num_speakers, options);
        return py::make_tuple(from_masks(result.masks), result.log_likelihood);
      },
      py::arg("tf"), py::arg("num_speakers"), py::arg("iterations") = 100, py::arg("seed") = 0,
      py::arg("align") = true, "Class posteriors (classes, frames, bins), noise last, and the log-likelihood trace.");

  m.def(
      "mvdr_souden",
      [](const ComplexArray& phi_x, const ComplexArray& phi_n, std::size_t reference) {
        const Eigen::VectorXcd w = mvdr_souden(to_matrix<Eigen::MatrixXcd>(phi_x),
                                               to_matrix<Eigen::MatrixXcd>(phi_n), reference);
        ComplexArray out(static_cast<py::ssize_t>(w.size()));
        auto view = out.mutable_unchecked<1>();
        for (Eigen::Index i = 0; i < w.size(); ++i) view(i) = w(i);
        return out;
      },
      py::arg("phi_x"), py::arg("phi_n"), py::arg("reference"));

  m.def(
      "mask_mvdr",
      [](const ComplexArray& tf, const RealArray& masks, std::size_t target) {
        const auto Y = to_tensor(tf, 0);
        if (masks.ndim() != 3 || static_cast<std::size_t>(masks.shape(1)) != Y.frames() ||
            static_cast<std::size_t>(masks.shape(2)) != Y.bins()) {
          throw std::invalid_argument("masks must be (classes, frames, bins) matching tf");
        }
        MaskSet set(static_cast<std::size_t>(masks.shape(0)), Y.frames(), Y.bins());
        std::memcpy(set.data().data(), masks.data(), set.data().size() * sizeof(double));
        const auto solution = mvdr_with_reference_selection(estimate_covariances(Y, set, target));
        return py::make_tuple(from_tensor(BeamformerOp(solution.weights).apply(Y)), solution.reference);
      },
      py::arg("tf"), py::arg("masks"), py::arg("target"),
      "Beamformed STFT of class `target` and the selected reference channel.");

  m.def("sdr", [](const RealArray& ref, const RealArray& est) { return sdr(to_signal(ref), to_signal(est)); },
        py::arg("ref"), py::arg("est"));
  m.def("si_sdr", [](const RealArray& ref, const RealArray& est) { return si_sdr(to_signal(ref), to_signal(est)); },
        py::arg("ref"), py::arg("est"));
  m.def(
      "bss_eval_sdr",
      [](const RealArray& ref, const RealArray& est, std::size_t tau_max) {
        return bss_eval_sdr(to_signal(ref), to_signal(est), tau_max);
      },
      py::arg("ref"), py::arg("est"), py::arg("tau_max") = 512);
  m.def(
      "resolve_permutation",
      [](const RealArray& score) { return resolve_permutation(to_matrix<Eigen::MatrixXd>(score)); }, py::arg("score"),
        "Column assigned to each row, maximizing the summed score.");

  m.def(
      "separate_scene",
      [](std::uint64_t master_seed, std::size_t index, const std::string& method, const std::string& config) {
        const auto cfg = parse_config(config);
        const auto scene = simulate_scene(cfg, master_seed, index);
        const auto sep = separate_scene(scene.bundle, parse_method(method), cfg, scene.seed);
        std::vector<const LinearOperator*> ops;
        for (const auto& op : sep.operators) ops.push_back(op.get());
        EvaluationOptions eval;
        eval.stft = cfg.stft;
        const auto report = evaluate_bundle(scene.bundle, sep.estimates, eval, &ops);
        py::list rows;
        for (const auto& r : report.rows) {
          py::dict row;
          row["speaker"] = r.speaker;
          row["estimate"] = r.estimate;
          row["sdr"] = r.sdr;
          row["si_sdr"] = r.si_sdr;
          row["bss_eval_sdr"] = r.bss_eval_sdr;
          row["invasive_sdr"] = r.invasive_sdr;
          rows.append(row);
        }
        return py::make_tuple(from_channels(sep.estimates), rows);
      },
      py::arg("master_seed"), py::arg("index"), py::arg("method") = "cacgmm-mvdr", py::arg("config") = "",
      "Simulates one scene, separates it and scores the estimates against the sources.");

  m.def(
      "generate_dataset",
      [](const std::string& out, std::uint64_t seed, std::size_t count, std::size_t jobs, const std::string& config) {
        GenerateOptions options;
        options.config = parse_config(config);
        options.seed = seed;
        options.count = count;
        options.jobs = jobs;
        options.out = out;
        py::gil_scoped_release release;
        return generate_dataset(options).dump();
      },
      py::arg("out"), py::arg("seed") = 0, py::arg("count") = 1, py::arg("jobs") = 1, py::arg("config") = "",
      "Writes a synthetic dataset; returns the manifest JSON.");
}
