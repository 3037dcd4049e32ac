#include "fsmcmc/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace fsmcmc {

namespace {

using nlohmann::json;

const std::pair<ExperimentKind, const char*> kExperimentNames[] = {
    {ExperimentKind::pcn_uniform_gap, "pcn_uniform_gap"},
    {ExperimentKind::rwm_decay, "rwm_decay"},
    {ExperimentKind::harris_verify, "harris_verify"},
    {ExperimentKind::ergodic_suite, "ergodic_suite"},
    {ExperimentKind::conductance_sweep, "conductance_sweep"},
};

std::string join(const std::string& parent, const std::string& key) { return parent + "/" + key; }

const json& require(const json& object, const std::string& parent, const std::string& key) {
  if (!object.is_object()) throw ConfigError(parent.empty() ? "/" : parent, "expected a table");
  auto it = object.find(key);
  if (it == object.end()) throw ConfigError(join(parent, key), "missing required field");
  return *it;
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ConfigError(path, "expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

double positive_number(const json& value, const std::string& path) {
  const double x = as_number(value, path);
  if (!(x > 0.0)) throw ConfigError(path, "must be positive");
  return x;
}

std::uint64_t as_unsigned(const json& value, const std::string& path) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer()) {
    if (value.get<std::int64_t>() < 0) throw ConfigError(path, "must be nonnegative");
    return static_cast<std::uint64_t>(value.get<std::int64_t>());
  }
  throw ConfigError(path, "expected a nonnegative integer");
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw ConfigError(path, "expected a string");
  return value.get<std::string>();
}

bool is_statistical(ExperimentKind kind) {
  return kind == ExperimentKind::pcn_uniform_gap || kind == ExperimentKind::rwm_decay ||
         kind == ExperimentKind::ergodic_suite;
}

json parse_spectrum(const json& node) {
  const std::string rule = as_string(require(node, "/spectrum", "rule"), "/spectrum/rule");
  if (rule == "power_law") {
    const double q = positive_number(require(node, "/spectrum", "q"), "/spectrum/q");
    return {{"rule", rule}, {"q", q}};
  }
  if (rule == "explicit") {
    const json& values = require(node, "/spectrum", "lambdas");
    if (!values.is_array() || values.empty()) throw ConfigError("/spectrum/lambdas", "expected a nonempty array");
    std::vector<double> lambdas;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::string path = "/spectrum/lambdas/" + std::to_string(i);
      const double v = as_number(values[i], path);
      if (v < 0.0) throw ConfigError(path, "must be nonnegative");
      lambdas.push_back(v);
    }
    return {{"rule", rule}, {"lambdas", lambdas}};
  }
  throw ConfigError("/spectrum/rule", "unknown rule '" + rule + "' (expected power_law or explicit)");
}

json parse_target(const json& node) {
  const std::string name = as_string(require(node, "/target", "target"), "/target/target");
  if (name == "zero") return {{"target", name}};
  if (name == "norm_tilt") {
    const double l = as_number(require(node, "/target", "L"), "/target/L");
    if (l < 0.0) throw ConfigError("/target/L", "must be nonnegative");
    return {{"target", name}, {"L", l}};
  }
  if (name == "power_tilt") {
    const double a = as_number(require(node, "/target", "a"), "/target/a");
    if (a < 0.0) throw ConfigError("/target/a", "must be nonnegative");
    return {{"target", name}, {"a", a}};
  }
  throw ConfigError("/target/target", "unknown target '" + name + "'");
}

void parse_kernel(const json& node, ExperimentConfig& config) {
  const std::string kind = as_string(require(node, "/kernel", "kind"), "/kernel/kind");
  if (kind != "pcn" && kind != "rwm") throw ConfigError("/kernel/kind", "expected pcn or rwm");
  config.kernel_kind = proposal_kind_from_string(kind);

  const bool has_delta = node.contains("delta");
  const bool has_scaling = node.contains("scaling");
  if (has_delta == has_scaling) throw ConfigError("/kernel", "specify exactly one of delta or scaling");
  if (has_delta) {
    config.step.fixed = positive_number(node["delta"], "/kernel/delta");
  } else {
    const json& scaling = node["scaling"];
    config.step.scale = positive_number(require(scaling, "/kernel/scaling", "s"), "/kernel/scaling/s");
    config.step.exponent = as_number(require(scaling, "/kernel/scaling", "a"), "/kernel/scaling/a");
    if (config.step.exponent < 0.0) throw ConfigError("/kernel/scaling/a", "must be nonnegative");
  }
  if (config.kernel_kind == ProposalKind::pcn) {
    for (std::size_t i = 0; i < config.m_list.size(); ++i) {
      const double d = config.step.at(config.m_list[i]);
      if (d > 0.5) {
        throw ConfigError(has_delta ? "/kernel/delta" : "/kernel/scaling",
                          "pCN needs delta <= 1/2 (got " + std::to_string(d) + " at m=" +
                              std::to_string(config.m_list[i]) + ")");
      }
    }
  }
}

void check_spectrum_dimensions(const ExperimentConfig& config) {
  if (config.spectrum.at("rule") != "explicit") return;
  const std::size_t available = config.spectrum.at("lambdas").size();
  if (config.m_list.back() > available) {
    throw ConfigError("/m_list", "exceeds the " + std::to_string(available) + " explicit eigenvalues");
  }
  if (config.kernel_kind == ProposalKind::rwm) {
    for (const auto& v : config.spectrum.at("lambdas")) {
      if (v.get<double>() <= 0.0) throw ConfigError("/spectrum/lambdas", "RWM needs strictly positive eigenvalues");
    }
  }
}

json toml_to_json(const toml::node& node) {
  if (const auto* table = node.as_table()) {
    json out = json::object();
    for (const auto& [key, value] : *table) out[std::string(key.str())] = toml_to_json(value);
    return out;
  }
  if (const auto* array = node.as_array()) {
    json out = json::array();
    for (const auto& value : *array) out.push_back(toml_to_json(value));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw ConfigError("/", "dates and times are not supported in configs");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kExperimentNames)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (const auto& [k, label] : kExperimentNames)
    if (name == label) return k;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

double StepSizeRule::at(std::size_t m) const {
  if (fixed) return *fixed;
  return scale * std::pow(static_cast<double>(m), -exponent);
}

Spectrum ExperimentConfig::spectrum_for(std::size_t m) const {
  if (spectrum.at("rule") == "power_law") return Spectrum::power_law(spectrum.at("q").get<double>(), m);
  return Spectrum::from_json(spectrum).with_dimension(m);
}

MHKernel ExperimentConfig::kernel_for(std::size_t m) const {
  return MHKernel(kernel_kind, step.at(m), make_target(target), GaussianMeasure(spectrum_for(m)));
}

ExperimentConfig parse_config(const json& document) {
  if (!document.is_object()) throw ConfigError("/", "expected a table at the top level");
  ExperimentConfig config;

  const std::string experiment = as_string(require(document, "", "experiment"), "/experiment");
  try {
    config.experiment = experiment_kind_from_string(experiment);
  } catch (const std::invalid_argument&) {
    throw ConfigError("/experiment", "unknown experiment '" + experiment + "'");
  }
  config.name = document.contains("name") ? as_string(document["name"], "/name") : experiment;

  config.seed = as_unsigned(require(document, "", "seed"), "/seed");

  const json& m_list = require(document, "", "m_list");
  if (!m_list.is_array() || m_list.empty()) throw ConfigError("/m_list", "expected a nonempty array");
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    const std::string path = "/m_list/" + std::to_string(i);
    const std::uint64_t m = as_unsigned(m_list[i], path);
    if (m == 0) throw ConfigError(path, "dimensions must be positive");
    if (!config.m_list.empty() && m <= config.m_list.back()) throw ConfigError(path, "m_list must be strictly ascending");
    config.m_list.push_back(static_cast<std::size_t>(m));
  }

  config.n_steps = static_cast<std::size_t>(as_unsigned(require(document, "", "n_steps"), "/n_steps"));
  if (is_statistical(config.experiment) && config.n_steps < 1000)
    throw ConfigError("/n_steps", "statistical experiments need at least 1000 steps");
  if (config.n_steps == 0) throw ConfigError("/n_steps", "must be positive");

  if (document.contains("n_replicas")) {
    config.n_replicas = static_cast<std::size_t>(as_unsigned(document["n_replicas"], "/n_replicas"));
    if (config.n_replicas == 0) throw ConfigError("/n_replicas", "must be positive");
  }

  config.spectrum = parse_spectrum(require(document, "", "spectrum"));
  config.target = parse_target(require(document, "", "target"));
  parse_kernel(require(document, "", "kernel"), config);
  check_spectrum_dimensions(config);

  if (document.contains("outputs")) {
    const json& outputs = document["outputs"];
    if (!outputs.is_object()) throw ConfigError("/outputs", "expected a table");
    if (outputs.contains("csv")) config.outputs.csv = as_string(outputs["csv"], "/outputs/csv");
    if (outputs.contains("json")) config.outputs.json = as_string(outputs["json"], "/outputs/json");
  }
  if (document.contains("options")) {
    if (!document["options"].is_object()) throw ConfigError("/options", "expected a table");
    config.options = document["options"];
  }
  validate_experiment_options(config);
  return config;
}

json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  if (path.extension() == ".toml") {
    try {
      return toml_to_json(toml::parse(text, path.string()));
    } catch (const toml::parse_error& e) {
      const auto& where = e.source().begin;
      throw ConfigError("/", "TOML syntax error at line " + std::to_string(where.line) + ": " +
                                 std::string(e.description()));
    }
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("JSON syntax error: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig config = parse_config(read_config_document(path));
  if (const char* env = std::getenv("FSMCMC_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("FSMCMC_SEED", "expected an unsigned integer");
    config.seed = seed;
  }
  return config;
}

}  // namespace fsmcmc
