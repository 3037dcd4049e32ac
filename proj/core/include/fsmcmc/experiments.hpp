#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsmcmc/config.hpp"

namespace fsmcmc {

/// One line of the sweep CSV.
struct SweepRow {
  std::size_t m = 0;
  double delta = 0.0;
  double a = 0.0;
  std::string method;
  double value = 0.0;
  bool is_upper_bound = false;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<SweepRow> rows;
  std::vector<Verdict> verdicts;
  nlohmann::json extras = nlohmann::json::object();  ///< certificates and other structured output

  bool passed() const;
  nlohmann::json summary_json(const ExperimentConfig& config) const;
};

/// Deterministic in (config, seed) and independent of `threads`.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1);

/// Writes the sweep CSV and summary JSON (plus certificate.json for
/// harris_verify) into `directory`. Throws std::runtime_error on I/O errors.
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& directory);

}  // namespace fsmcmc
