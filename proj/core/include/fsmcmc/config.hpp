#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsmcmc/kernel.hpp"

namespace fsmcmc {

enum class ExperimentKind { pcn_uniform_gap, rwm_decay, harris_verify, ergodic_suite, conductance_sweep };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Invalid configuration; `field` is a JSON-pointer-like path such as
/// "/kernel/delta".
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Either a fixed delta or the scaling delta_m = s m^{-a}.
struct StepSizeRule {
  std::optional<double> fixed;
  double scale = 1.0;
  double exponent = 0.0;

  double at(std::size_t m) const;
  /// Exponent a as reported in the sweep CSV (0 for a fixed delta).
  double reported_exponent() const { return fixed ? 0.0 : exponent; }
};

struct OutputPaths {
  std::string csv = "sweep.csv";
  std::string json = "summary.json";
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::pcn_uniform_gap;
  std::string name;
  nlohmann::json spectrum;  ///< rule + parameters; the dimension comes from m_list
  nlohmann::json target;
  ProposalKind kernel_kind = ProposalKind::pcn;
  StepSizeRule step;
  std::vector<std::size_t> m_list;
  std::size_t n_steps = 0;
  std::size_t n_replicas = 1;
  std::uint64_t seed = 0;
  OutputPaths outputs;
  nlohmann::json options = nlohmann::json::object();  ///< experiment-specific knobs

  Spectrum spectrum_for(std::size_t m) const;
  MHKernel kernel_for(std::size_t m) const;
};

/// Checks the experiment-specific `options` table. Throws ConfigError.
void validate_experiment_options(const ExperimentConfig& config);

/// Validates and converts a parsed document, options included. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& document);

/// Reads a .json or .toml file into JSON. Throws ConfigError on syntax
/// errors and std::runtime_error when the file cannot be read.
nlohmann::json read_config_document(const std::filesystem::path& path);

/// read_config_document + parse_config, then applies FSMCMC_SEED when set.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace fsmcmc
