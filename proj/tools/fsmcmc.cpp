#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsmcmc/config.hpp"
#include "fsmcmc/experiments.hpp"
#include "fsmcmc/stats.hpp"
#include "fsmcmc/sweep_io.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kVerdictFailure = 1, kConfigError = 2, kIoError = 3 };

fs::path bundled_config_dir() {
  for (const fs::path& candidate : {fs::path(FSMCMC_INSTALL_CONFIG_DIR), fs::path(FSMCMC_SOURCE_CONFIG_DIR)}) {
    std::error_code ec;
    if (fs::is_directory(candidate, ec)) return candidate;
  }
  return FSMCMC_SOURCE_CONFIG_DIR;
}

std::vector<fs::path> config_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".toml" || ext == ".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int run_one(const fs::path& config_path, const fs::path& out_dir, unsigned threads) {
  const fsmcmc::ExperimentConfig config = fsmcmc::load_config(config_path);
  const auto start = std::chrono::steady_clock::now();
  const fsmcmc::ExperimentResult result = fsmcmc::run_experiment(config, threads);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fsmcmc::write_outputs(result, config, out_dir);

  std::cout << config.name << " (" << fsmcmc::to_string(config.experiment) << ", seed " << config.seed << ")\n";
  for (const auto& v : result.verdicts)
    std::cout << "  " << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
  std::cout << "  " << result.rows.size() << " rows -> " << (out_dir / config.outputs.csv).string() << " ("
            << seconds << " s)\n";
  return result.passed() ? kOk : kVerdictFailure;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const fsmcmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Function-space MCMC experiments: pCN and RWM sweeps, Harris certificates, gap diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string configs_dir;
  unsigned threads = fsmcmc::default_thread_count();
  bool all = false;

  auto* run = app.add_subcommand("run", "Run an experiment and write sweep CSV and summary JSON");
  run->add_option("-c,--config", config_path, "Experiment config (.toml or .json)");
  run->add_option("-o,--out", out_dir, "Output directory");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--all", all, "Run every bundled config, one subdirectory each");
  run->add_option("--configs-dir", configs_dir, "Directory searched by --all");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("-c,--config", config_path, "Experiment config")->required();

  std::string csv_path;
  auto* report = app.add_subcommand("report", "Render a sweep CSV as a fixed-width table");
  report->add_option("-i,--input", csv_path, "Sweep CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  if (*run) {
    if (all == !config_path.empty()) {
      std::cerr << "run: pass exactly one of --config or --all\n";
      return kConfigError;
    }
    if (!all) return guarded([&] { return run_one(config_path, out_dir, threads); });
    return guarded([&] {
      const fs::path dir = configs_dir.empty() ? bundled_config_dir() : fs::path(configs_dir);
      int worst = kOk;
      for (const auto& file : config_files(dir)) {
        const int code = guarded([&] { return run_one(file, fs::path(out_dir) / file.stem(), threads); });
        worst = std::max(worst, code);
      }
      return worst;
    });
  }

  if (*validate) {
    return guarded([&] {
      const auto config = fsmcmc::load_config(config_path);
      std::cout << config_path << ": ok (" << fsmcmc::to_string(config.experiment) << ", " << config.m_list.size()
                << " dimensions)\n";
      return kOk;
    });
  }

  return guarded([&] {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open " + csv_path);
    std::cout << fsmcmc::render_report(fsmcmc::read_sweep_csv(in));
    return kOk;
  });
}
