// mixlab: generate simulated mixtures, separate them, evaluate and report.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mixlab/error.hpp"
#include "mixlab/io.hpp"
#include "mixlab/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

nlohmann::json read_summary(const fs::path& path) {
  const auto file = fs::is_directory(path) ? path / "summary.json" : path;
  if (!fs::exists(file)) throw mixlab::DataError("evaluation file " + file.string() + " not found");
  return nlohmann::json::parse(mixlab::read_text(file));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated multi-speaker mixtures: generation, separation and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  std::size_t jobs = 1;
  bool synthetic = false;
  std::string sources;
  std::string out;
  std::string manifest;
  std::string method = "cacgmm-mvdr";
  std::string estimates;
  std::string reference = "source";
  std::vector<std::string> evaluations;

  auto* generate = app.add_subcommand("generate", "Simulate scenes and write a dataset manifest");
  generate->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  generate->add_option("--seed", seed, "Master seed");
  generate->add_option("--count", count, "Number of scenes")->check(CLI::PositiveNumber);
  generate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  generate->add_flag("--synthetic", synthetic, "Use synthetic speech-like sources");
  generate->add_option("--sources", sources, "Directory of mono WAV source files");
  generate->add_option("--out", out, "Output directory")->required();

  auto* separate = app.add_subcommand("separate", "Separate every scene of a dataset");
  separate->add_option("--manifest", manifest, "Dataset manifest.json")->required();
  separate->add_option("--method", method, "observation, cacgmm-mask, cacgmm-mvdr, irm-mvdr or ibm-mvdr")
      ->check(CLI::IsMember({"observation", "cacgmm-mask", "cacgmm-mvdr", "irm-mvdr", "ibm-mvdr"}));
  separate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  separate->add_option("--out", out, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score separated estimates");
  evaluate->add_option("--manifest", manifest, "Dataset manifest.json")->required();
  evaluate->add_option("--estimates", estimates, "Directory written by separate")->required();
  evaluate->add_option("--reference", reference, "Reference signal kind")
      ->check(CLI::IsMember({"source", "early", "image", "noisy"}));
  evaluate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  evaluate->add_option("--out", out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Tabulate evaluation summaries");
  report->add_option("evaluations", evaluations, "summary.json files or evaluation directories")->required();
  report->add_option("--out", out, "Write the table to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*generate) {
      if (synthetic == !sources.empty()) throw mixlab::UsageError("pass exactly one of --synthetic or --sources");
      mixlab::GenerateOptions options;
      if (!config_path.empty()) options.config = mixlab::load_config(config_path);
      options.seed = seed;
      options.count = count;
      options.jobs = jobs;
      options.source_dir = sources;
      options.out = out;
      const auto result = mixlab::generate_dataset(options);
      std::cout << "wrote " << result.at("scenes").size() << " scenes to " << out << "\n";
    } else if (*separate) {
      mixlab::SeparateOptions options;
      options.manifest = manifest;
      options.method = mixlab::parse_method(method);
      options.out = out;
      options.jobs = jobs;
      const auto result = mixlab::separate_dataset(options);
      const std::size_t failed = result.at("failed");
      std::cout << "separated " << result.at("scenes").size() - failed << " scenes, " << failed << " failed\n";
      if (failed > 0) return kNumerical;
    } else if (*evaluate) {
      mixlab::EvaluateOptions options;
      options.manifest = manifest;
      options.estimates = estimates;
      options.reference = mixlab::parse_reference_kind(reference);
      options.out = out;
      options.jobs = jobs;
      const auto result = mixlab::evaluate_dataset(options);
      std::cout << result.at("metrics").dump(2) << "\n";
    } else if (*report) {
      std::vector<nlohmann::json> summaries;
      for (const auto& path : evaluations) summaries.push_back(read_summary(path));
      const auto table = mixlab::render_report(summaries);
      if (out.empty()) {
        std::cout << table;
      } else {
        mixlab::write_text_atomic(out, table);
      }
    }
  } catch (const mixlab::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const mixlab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const mixlab::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
