// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed below.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mixlab/beamformer.hpp"
#include "mixlab/cacgmm.hpp"
#include "mixlab/geometry.hpp"
#include "mixlab/io.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/pipeline.hpp"
#include "mixlab/rir.hpp"
#include "mixlab/stft.hpp"
#include "support/constructed.hpp"
#include "support/oracles.hpp"

using namespace mixlab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// 1. STFT round trip.
Outcome stft_round_trip() {
  constexpr double kTol = 1e-6;
  constexpr double kLimit = 10.0;
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t channels = 1 + rng.uniform_int(0, 5);
    const std::size_t length = 512 + rng.uniform_int(0, 32000);
    MultiSignal x;
    for (std::size_t c = 0; c < channels; ++c) x.push_back(oracle::white_noise(length, rng));
    const auto y = synthesize(analyze(x));
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t i = 0; i < length; ++i) {
        num += (y[c][i] - x[c][i]) * (y[c][i] - x[c][i]);
        den += x[c][i] * x[c][i];
      }
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  const double elapsed = seconds_since(start);
  return {worst <= kTol && elapsed < kLimit,
          fmt("worst relative error %.2e (tol %.0e) over 100 signals, %.2f s (limit %.0f s)", worst, kTol, elapsed,
              kLimit)};
}

// 2. RIR engine against the free-field and Schroeder oracles.
Outcome rir_engine() {
  constexpr double kAmplitudeTol = 0.01;
  constexpr double kT60Tol = 0.20;
  const GeometryConfig geometry;
  RirOptions anechoic;
  anechoic.max_order = 0;
  anechoic.high_pass = false;
  std::size_t location_fail = 0, amplitude_fail = 0;
  double worst_amplitude = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto scene = sample_scene(geometry, Rng::mix(202, i));
    const auto& mic = scene.mic_positions[0];
    const auto& src = scene.source_positions[0];
    const double d = distance(src, mic);
    const auto h = image_method_response(scene.room_dims, src, mic, 0.9, scene.sample_rate, 800, anechoic);
    std::size_t arg = 0;
    for (std::size_t n = 0; n < h.size(); ++n) {
      if (std::abs(h[n]) > std::abs(h[arg])) arg = n;
    }
    const auto expected_at = std::lround(d / 343.0 * scene.sample_rate);
    if (std::abs(static_cast<long>(arg) - expected_at) > 1) ++location_fail;
    // Amplitude of the band-limited impulse: its passband magnitude response.
    const double expected = 1.0 / (4.0 * std::numbers::pi * d);
    const auto [lo, hi] = oracle::passband_magnitude(h);
    const double err = std::max(std::abs(lo - expected), std::abs(hi - expected)) / expected;
    worst_amplitude = std::max(worst_amplitude, err);
    if (err > kAmplitudeTol) ++amplitude_fail;
  }
  std::size_t t60_fail = 0;
  double worst_t60 = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto scene = sample_scene(geometry, Rng::mix(203, i));
    const auto rirs = simulate_rir(scene);
    for (std::size_t k = 0; k < rirs.num_sources(); ++k) {
      const double t60 = oracle::schroeder_t60(rirs.h[k], rirs.start_sample[k], rirs.sample_rate);
      const double err = std::abs(t60 - scene.t60) / scene.t60;
      worst_t60 = std::max(worst_t60, err);
      if (err > kT60Tol) ++t60_fail;
    }
  }
  return {location_fail + amplitude_fail + t60_fail == 0,
          fmt("(a) peak location misses %zu/50, amplitude misses %zu/50 (worst %.3f%%, tol %.0f%%); "
              "(b) T60 misses %zu/100 (worst %.1f%%, tol %.0f%%)",
              location_fail, amplitude_fail, 100.0 * worst_amplitude, 100.0 * kAmplitudeTol, t60_fail,
              100.0 * worst_t60, 100.0 * kT60Tol)};
}

// 3. Metric properties and explicit least-squares oracles.
Outcome metric_properties() {
  constexpr double kScaleTol = 1e-9;
  constexpr double kOracleTol = 1e-6;
  Rng rng(303);
  double worst_scale = 0.0, worst_sdr = 0.0, worst_si = 0.0, worst_bss = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::white_noise(1024, rng);
    auto est = oracle::delayed(s, static_cast<std::size_t>(trial));
    const auto noise = oracle::white_noise(1024, rng);
    const double mix = rng.uniform(0.05, 1.0);
    for (std::size_t i = 0; i < est.size(); ++i) est[i] += mix * noise[i];
    const double base = si_sdr(s, est);
    for (double c : {-4.0, 1e-3, 0.37, 250.0}) {
      Signal scaled = est;
      for (double& v : scaled) v *= c;
      worst_scale = std::max(worst_scale, std::abs(si_sdr(s, scaled) - base));
    }
    Signal err(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) err[i] = s[i] - est[i];
    worst_sdr = std::max(worst_sdr, std::abs(sdr(s, est) - 10.0 * std::log10(oracle::energy(s) / oracle::energy(err))));
    worst_si = std::max(worst_si, std::abs(base - oracle::si_sdr_beta_form(s, est)));
    worst_bss = std::max(worst_bss, std::abs(bss_eval_sdr(s, est) - oracle::projected_sdr(s, est, 512)));
  }
  // The reference ends in silence, so the delay drops no samples.
  const auto white = oracle::white_noise_with_tail(8000, 100, rng);
  const auto delayed = oracle::delayed(white, 100);
  const double bss = bss_eval_sdr(white, delayed);
  const double si = si_sdr(white, delayed);
  const bool pass = worst_scale <= kScaleTol && worst_sdr <= kOracleTol && worst_si <= kOracleTol &&
                    worst_bss <= kOracleTol && bss >= 60.0 && si <= 0.0;
  return {pass, fmt("scale invariance %.1e dB (tol %.0e); oracle gaps sdr %.1e, si_sdr %.1e, bss_eval %.1e dB "
                    "(tol %.0e); delayed white noise bss_eval %.1f dB (>= 60), si_sdr %.2f dB (<= 0)",
                    worst_scale, kScaleTol, worst_sdr, worst_si, worst_bss, kOracleTol, bss, si)};
}

// 4. Reference ordering: early image > full image > noisy image.
Outcome reference_ordering() {
  constexpr double kLimit = 300.0;
  const auto start = Clock::now();
  const DatasetConfig config;
  std::vector<double> early, full, noisy;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto scene = simulate_scene(config, 404, i);
    const auto& b = scene.bundle;
    for (std::size_t k = 0; k < b.num_sources(); ++k) {
      Signal with_noise = b.x[k][0];
      for (std::size_t n = 0; n < with_noise.size(); ++n) with_noise[n] += b.n[0][n];
      early.push_back(bss_eval_sdr(b.s[k], b.x_early[k][0]));
      full.push_back(bss_eval_sdr(b.s[k], b.x[k][0]));
      noisy.push_back(bss_eval_sdr(b.s[k], with_noise));
    }
  }
  const double e = mean(early), f = mean(full), n = mean(noisy);
  const double elapsed = seconds_since(start);
  return {e > f && f > n && elapsed < kLimit,
          fmt("mean BSS-Eval SDR early %.2f > image %.2f > noisy %.2f dB; %.1f s (limit %.0f s)", e, f, n, elapsed,
              kLimit)};
}

// 5. cACGMM monotonicity, simplex and the constructed data set.
Outcome cacgmm_properties() {
  constexpr double kMonotoneTol = 1e-6;
  constexpr double kSimplexTol = 1e-9;
  constexpr double kConfident = 0.95;
  const DatasetConfig config;
  double worst_drop = 0.0, worst_simplex = 0.0;
  std::size_t observed = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto scene = simulate_scene(config, 505, i);
    CacgmmOptions options;
    options.iterations = 100;
    options.align = false;
    options.seed = i;
    options.observer = [&](std::size_t, std::span<const Eigen::MatrixXd> gamma) {
      ++observed;
      for (const auto& g : gamma) {
        worst_simplex = std::max(worst_simplex, (g.colwise().sum().array() - 1.0).abs().maxCoeff());
        if (g.minCoeff() < 0.0) worst_simplex = std::max(worst_simplex, -g.minCoeff());
      }
    };
    const auto ll = fit_cacgmm(analyze(scene.bundle.y), 2, options).log_likelihood;
    for (std::size_t it = 1; it < ll.size(); ++it) {
      worst_drop = std::max(worst_drop, (ll[it - 1] - ll[it]) / std::abs(ll[it - 1]));
    }
  }
  CacgmmOptions options;
  options.iterations = 20;
  const auto fit = fit_cacgmm(constructed::orthogonal_steering_data(55), 2, options);
  const double c0 = constructed::confident_fraction(fit.masks, 0);
  const double c1 = constructed::confident_fraction(fit.masks, 1);
  const bool pass = worst_drop <= kMonotoneTol && worst_simplex <= kSimplexTol && observed == 500 &&
                    c0 >= kConfident && c1 >= kConfident;
  return {pass, fmt("largest relative log-likelihood drop %.1e (tol %.0e) over 5x100 iterations; simplex error "
                    "%.1e (tol %.0e) in %zu iterations; constructed data confident %.1f%% / %.1f%% (>= %.0f%%)",
                    worst_drop, kMonotoneTol, worst_simplex, kSimplexTol, observed, 100.0 * c0, 100.0 * c1,
                    100.0 * kConfident)};
}

// 6. End-to-end ordering of the five systems.
Outcome end_to_end() {
  constexpr double kOracleSlack = 1.0;
  constexpr double kMvdrGain = 8.0;
  constexpr double kLimit = 900.0;
  const auto start = Clock::now();
  const DatasetConfig config;
  const std::vector<Method> methods{Method::kObservation, Method::kCacgmmMask, Method::kCacgmmMvdr, Method::kIrmMvdr,
                                    Method::kIbmMvdr};
  std::vector<std::vector<double>> bss(methods.size()), invasive(methods.size());
  for (std::size_t i = 0; i < 20; ++i) {
    const auto scene = simulate_scene(config, 606, i);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto sep = separate_scene(scene.bundle, methods[m], config, scene.seed);
      std::vector<const LinearOperator*> ops;
      for (const auto& op : sep.operators) ops.push_back(op.get());
      const auto eval = evaluate_bundle(scene.bundle, sep.estimates, {}, &ops);
      for (const auto& row : eval.rows) {
        bss[m].push_back(row.bss_eval_sdr);
        invasive[m].push_back(*row.invasive_sdr);
      }
    }
  }
  const double elapsed = seconds_since(start);
  const auto ordered = [&](const std::vector<double>& v) {
    return v[0] < v[1] && v[1] < v[2] && v[2] <= v[3] + kOracleSlack && v[3] <= v[4] + kOracleSlack;
  };
  std::vector<double> b, inv;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    b.push_back(mean(bss[m]));
    inv.push_back(mean(invasive[m]));
  }
  const bool pass = ordered(b) && ordered(inv) && inv[2] >= inv[0] + kMvdrGain && elapsed < kLimit;
  return {pass, fmt("BSS-Eval SDR obs %.2f < mask %.2f < mvdr %.2f <= irm %.2f <= ibm %.2f (+%.0f dB oracle slack); "
                    "invasive %.2f < %.2f < %.2f <= %.2f <= %.2f; mvdr gain %.2f dB (>= %.0f); %.0f s (limit %.0f s)",
                    b[0], b[1], b[2], b[3], b[4], kOracleSlack, inv[0], inv[1], inv[2], inv[3], inv[4],
                    inv[2] - inv[0], kMvdrGain, elapsed, kLimit)};
}

// 7. MVDR closed form.
Outcome mvdr_closed_form() {
  constexpr double kDistortionTol = 1e-8;
  constexpr double kScaleTol = 1e-12;
  Rng rng(707);
  const auto cn = [&] { return std::complex<double>(rng.normal(), rng.normal()); };
  double worst_distortion = 0.0, worst_scale = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index D = 2 + static_cast<Eigen::Index>(rng.uniform_int(0, 6));
    Eigen::VectorXcd d(D);
    for (Eigen::Index i = 0; i < D; ++i) d(i) = cn();
    const double sigma = rng.uniform(0.01, 10.0);
    Eigen::MatrixXcd a(D, 2 * D);
    for (Eigen::Index i = 0; i < D; ++i) {
      for (Eigen::Index j = 0; j < 2 * D; ++j) a(i, j) = cn();
    }
    const Eigen::MatrixXcd phi_n = a * a.adjoint();
    const Eigen::MatrixXcd phi_x = sigma * sigma * d * d.adjoint();
    const auto ref = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::uint64_t>(D - 1)));
    const Eigen::VectorXcd w = mvdr_souden(phi_x, phi_n, ref);
    const std::complex<double> response = w.adjoint() * d;
    const auto dr = d(static_cast<Eigen::Index>(ref));
    worst_distortion = std::max(worst_distortion, std::abs(response - dr) / std::abs(dr));
    const double c = rng.uniform(1e-3, 1e3);
    const Eigen::VectorXcd wc = mvdr_souden(c * phi_x, phi_n, ref);
    worst_scale = std::max(worst_scale, (wc - w).norm() / w.norm());
  }
  return {worst_distortion <= kDistortionTol && worst_scale <= kScaleTol,
          fmt("rank-1 distortion %.1e (tol %.0e), scale change %.1e (tol %.0e) over 100 draws", worst_distortion,
              kDistortionTol, worst_scale, kScaleTol)};
}

// 8. Determinism of the command line pipeline.
int run(const std::string& args) {
  const std::string command = std::string(MIXLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), root).string()] = read_text(entry.path());
  }
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mixlab_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  write_text_atomic(root / "config.json", R"({"synthetic": {"duration_s": [1.5, 2.0]}, "em_iterations": 10})");
  std::vector<std::string> failures;
  std::vector<std::map<std::string, std::string>> snapshots;
  const std::vector<std::pair<std::string, std::size_t>> runs{{"a", 1}, {"b", 1}, {"c", 4}};
  for (const auto& [name, jobs] : runs) {
    const auto dir = root / name;
    const std::string j = " --jobs " + std::to_string(jobs);
    const std::string manifest = "'" + (dir / "data" / "manifest.json").string() + "'";
    const bool ok =
        run("generate --synthetic --seed 808 --count 4" + j + " --config '" + (root / "config.json").string() +
            "' --out '" + (dir / "data").string() + "'") == 0 &&
        run("separate --manifest " + manifest + " --method cacgmm-mvdr" + j + " --out '" + (dir / "sep").string() +
            "'") == 0 &&
        run("evaluate --manifest " + manifest + " --estimates '" + (dir / "sep").string() + "'" + j + " --out '" +
            (dir / "eval").string() + "'") == 0;
    if (!ok) failures.push_back("run " + name + " failed");
    snapshots.push_back(snapshot(dir));
  }
  std::size_t compared = 0;
  for (std::size_t r = 1; r < snapshots.size(); ++r) {
    if (snapshots[r].size() != snapshots[0].size()) failures.push_back("file sets differ");
    for (const auto& [file, content] : snapshots[0]) {
      const auto it = snapshots[r].find(file);
      if (it == snapshots[r].end() || it->second != content) failures.push_back(runs[r].first + ":" + file);
      ++compared;
    }
  }
  const bool has_csv = snapshots[0].count("eval/rows.csv") == 1;
  if (!has_csv) failures.push_back("rows.csv missing");
  std::string detail = fmt("%zu file comparisons (manifest, WAV, npy, CSV) across two jobs=1 runs and jobs=4, "
                           "%zu differ",
                           compared, failures.size());
  if (!failures.empty()) detail += "; first: " + failures.front();
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 STFT round trip", stft_round_trip},
      {"2 RIR engine", rir_engine},
      {"3 Metric properties", metric_properties},
      {"4 Reference ordering", reference_ordering},
      {"5 cACGMM", cacgmm_properties},
      {"6 End-to-end ordering", end_to_end},
      {"7 MVDR closed form", mvdr_closed_form},
      {"8 Determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
