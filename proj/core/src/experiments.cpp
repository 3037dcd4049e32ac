#include "fsmcmc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fsmcmc/coupling.hpp"
#include "fsmcmc/diagnostics.hpp"
#include "fsmcmc/sweep_io.hpp"

namespace fsmcmc {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Option access with field-path errors

class Options {
public:
  explicit Options(const ExperimentConfig& config) : node_(config.options) {}

  double number(const std::string& key, double fallback) const {
    auto it = node_.find(key);
    if (it == node_.end()) return fallback;
    if (!it->is_number() || !std::isfinite(it->get<double>())) throw ConfigError(path(key), "expected a finite number");
    return it->get<double>();
  }
  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(path(key), "must be positive");
    return v;
  }
  std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum = 1) const {
    auto it = node_.find(key);
    if (it == node_.end()) return fallback;
    if (!it->is_number_integer() || it->get<std::int64_t>() < static_cast<std::int64_t>(minimum))
      throw ConfigError(path(key), "expected an integer >= " + std::to_string(minimum));
    return it->get<std::size_t>();
  }
  bool flag(const std::string& key, bool fallback) const {
    auto it = node_.find(key);
    if (it == node_.end()) return fallback;
    if (!it->is_boolean()) throw ConfigError(path(key), "expected true or false");
    return it->get<bool>();
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    auto it = node_.find(key);
    if (it == node_.end()) return fallback;
    if (!it->is_array() || it->empty()) throw ConfigError(path(key), "expected a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& v = (*it)[i];
      if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw ConfigError(path(key) + "/" + std::to_string(i), "expected a finite number");
      out.push_back(v.get<double>());
    }
    return out;
  }
  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) const {
    auto it = node_.find(key);
    if (it == node_.end()) return fallback;
    if (!it->is_array() || it->empty()) throw ConfigError(path(key), "expected a nonempty array");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& v = (*it)[i];
      if (!v.is_number_integer() || v.get<std::int64_t>() <= 0)
        throw ConfigError(path(key) + "/" + std::to_string(i), "expected a positive integer");
      out.push_back(v.get<std::size_t>());
    }
    return out;
  }
  bool has(const std::string& key) const { return node_.contains(key); }
  static std::string path(const std::string& key) { return "/options/" + key; }

private:
  const json& node_;
};

// ---------------------------------------------------------------------------
// Per-experiment settings

struct PcnGapSettings {
  std::size_t warm_burn_in;
  double gap_tolerance;
  double iact_tolerance;
};

struct RwmDecaySettings {
  double ball_sigma;
  double ball_r;
  std::size_t proposals_per_point;
  std::size_t warm_burn_in;
  std::size_t warm_thin;
  double warm_delta;
};

struct ConductanceSettings {
  std::vector<double> a_list;
  bool orthant_check;
  std::size_t orthant_samples;
  double slope_tolerance;
  std::size_t warm_burn_in;
  std::size_t warm_thin;
};

struct HarrisSettings {
  DistanceParams distance;
  std::vector<double> radii;
  std::size_t lyapunov_samples;
  double inner_radius;
  double outer_radius;
  std::size_t contraction_pairs;
  std::size_t contraction_trials;
  std::size_t smallness_pairs;
  std::size_t smallness_trials;
  std::size_t smallness_steps;
};

struct ErgodicSettings {
  std::vector<std::size_t> mse_n;
  std::optional<double> beta;
  std::vector<std::size_t> slln_n;
  double far_factor;
  double burn_in_p;
  double density_ratio_norm;
  double sigma2_tolerance;
};

PcnGapSettings pcn_gap_settings(const ExperimentConfig& config) {
  const Options o(config);
  return {o.count("warm_burn_in", 10000, 0), o.positive("gap_tolerance", 0.10), o.positive("iact_tolerance", 0.15)};
}

RwmDecaySettings rwm_decay_settings(const ExperimentConfig& config) {
  const Options o(config);
  RwmDecaySettings s;
  const double a = config.step.reported_exponent();
  s.ball_sigma = o.number("ball_sigma", (2.0 + a) / 6.0);
  if (s.ball_sigma < 0.0) throw ConfigError(Options::path("ball_sigma"), "must be nonnegative");
  s.ball_r = o.positive("ball_r", 3.0);
  s.proposals_per_point = o.count("proposals_per_point", 32);
  s.warm_burn_in = o.count("warm_burn_in", 2000, 0);
  s.warm_thin = o.count("warm_thin", 10);
  s.warm_delta = o.positive("warm_delta", 0.18);
  if (s.warm_delta > 0.5) throw ConfigError(Options::path("warm_delta"), "pCN needs delta <= 1/2");
  return s;
}

ConductanceSettings conductance_settings(const ExperimentConfig& config) {
  const Options o(config);
  ConductanceSettings s;
  s.a_list = o.numbers("a_list", {config.step.reported_exponent()});
  for (std::size_t i = 0; i < s.a_list.size(); ++i)
    if (s.a_list[i] < 0.0) throw ConfigError(Options::path("a_list") + "/" + std::to_string(i), "must be nonnegative");
  if (o.has("a_list") && config.step.fixed)
    throw ConfigError(Options::path("a_list"), "needs /kernel/scaling rather than a fixed delta");
  s.orthant_check = o.flag("orthant_check", false);
  s.orthant_samples = o.count("orthant_samples", config.n_steps);
  s.slope_tolerance = o.positive("slope_tolerance", 0.1);
  s.warm_burn_in = o.count("warm_burn_in", 2000, 0);
  s.warm_thin = o.count("warm_thin", 10);
  return s;
}

HarrisSettings harris_settings(const ExperimentConfig& config) {
  const Options o(config);
  if (config.kernel_kind != ProposalKind::pcn) throw ConfigError("/kernel/kind", "harris_verify certifies pCN only");
  HarrisSettings s;
  s.distance.epsilon = o.positive("epsilon", 0.1);
  s.distance.eta = o.number("eta", 0.0);
  if (s.distance.eta < 0.0) throw ConfigError(Options::path("eta"), "must be nonnegative");
  if (o.has("v_rate")) {
    s.distance.v_spec = ExpNorm{o.positive("v_rate", 0.1)};
  } else {
    s.distance.v_spec = PowerNorm{static_cast<int>(o.count("v_power", 2))};
  }
  s.radii = o.numbers("radii", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0});
  for (std::size_t i = 0; i < s.radii.size(); ++i)
    if (s.radii[i] < 0.0) throw ConfigError(Options::path("radii") + "/" + std::to_string(i), "must be nonnegative");
  s.lyapunov_samples = o.count("lyapunov_samples", config.n_steps, 2);
  s.inner_radius = o.positive("inner_radius", 2.0);
  s.outer_radius = o.positive("outer_radius", 6.0);
  if (s.outer_radius <= s.inner_radius) throw ConfigError(Options::path("outer_radius"), "must exceed inner_radius");
  s.contraction_pairs = o.count("contraction_pairs", 100);
  s.contraction_trials = o.count("contraction_trials", 2000, 2);
  s.smallness_pairs = o.count("smallness_pairs", 64);
  s.smallness_trials = o.count("smallness_trials", 500, 2);
  s.smallness_steps = o.count("smallness_steps", 0, 0);
  return s;
}

ErgodicSettings ergodic_settings(const ExperimentConfig& config) {
  const Options o(config);
  ErgodicSettings s;
  s.mse_n = o.counts("mse_n", {100, 1000, config.n_steps});
  for (std::size_t i = 0; i < s.mse_n.size(); ++i)
    if (s.mse_n[i] > config.n_steps)
      throw ConfigError(Options::path("mse_n") + "/" + std::to_string(i), "must not exceed n_steps");
  if (o.has("beta")) {
    s.beta = o.number("beta", 0.0);
    if (*s.beta < 0.0 || *s.beta >= 1.0) throw ConfigError(Options::path("beta"), "must lie in [0, 1)");
  }
  s.slln_n = o.counts("slln_n", {1000, 10000, 100000});
  if (*std::max_element(s.slln_n.begin(), s.slln_n.end()) < 1000)
    throw ConfigError(Options::path("slln_n"), "largest entry must be at least 1000");
  s.far_factor = o.positive("far_factor", 10.0);
  s.burn_in_p = o.number("burn_in_p", 4.0);
  if (!(s.burn_in_p > 2.0)) throw ConfigError(Options::path("burn_in_p"), "must exceed 2");
  s.density_ratio_norm = o.number("density_ratio_norm", 1.0);
  if (s.density_ratio_norm < 0.0) throw ConfigError(Options::path("density_ratio_norm"), "must be nonnegative");
  s.sigma2_tolerance = o.positive("sigma2_tolerance", 0.15);
  if (config.n_replicas < 200) throw ConfigError("/n_replicas", "ergodic_suite needs at least 200 replicas");
  return s;
}

// ---------------------------------------------------------------------------
// Shared helpers

struct Context {
  const ExperimentConfig& config;
  unsigned threads;
  RngStream root;
};

SweepRow make_row(const Context& ctx, std::size_t m, double delta, std::string method, double value,
                  bool is_upper_bound, Interval ci, std::size_t n_samples) {
  return {m, delta, ctx.config.step.reported_exponent(), std::move(method), value, is_upper_bound, ci.lo, ci.hi,
          n_samples, ctx.config.seed};
}

SweepRow row_from_report(const Context& ctx, double delta, double a, const GapReport& report) {
  const Interval ci = report.ci.value_or(Interval{report.value, report.value});
  return {report.m, delta, a, to_string(report.method), report.value, report.is_upper_bound, ci.lo, ci.hi,
          report.n_samples, ctx.config.seed};
}

Interval point(double v) { return {v, v}; }

bool strictly_decreasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] < values[i - 1])) return false;
  return true;
}

std::string fmt(double v) { return format_number(v); }

bool within_relative(double value, double truth, double tolerance) {
  return std::abs(value - truth) <= tolerance * std::abs(truth);
}

/// Every pair of estimates agrees within z times their combined standard error.
bool pooled_band(const std::vector<Estimate>& estimates, double z, std::string& detail) {
  bool ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t j = i + 1; j < estimates.size(); ++j) {
      const double se = std::hypot(estimates[i].std_error, estimates[j].std_error);
      const double gap = std::abs(estimates[i].value - estimates[j].value);
      const double score = se > 0.0 ? gap / se : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      worst = std::max(worst, score);
      if (score > z) ok = false;
    }
  }
  detail = "largest pairwise difference = " + fmt(worst) + " combined standard errors";
  return ok;
}

StationarySampler stationary_sampler(const MHKernel& kernel, const ExperimentConfig& config, std::size_t m,
                                     double warm_delta, std::size_t burn_in, std::size_t thin) {
  if (kernel.target().is_zero()) return reference_sampler(kernel.measure());
  const MHKernel warm(ProposalKind::pcn, warm_delta, make_target(config.target), GaussianMeasure(config.spectrum_for(m)));
  return warm_start_sampler(warm, burn_in, thin);
}

// ---------------------------------------------------------------------------
// pcn_uniform_gap

struct ChainSummary {
  std::size_t accepted = 0;
  GapReport gap;
  IactEstimate iact;
  ErgodicSummary mean;
};

ExperimentResult run_pcn_uniform_gap(const Context& ctx) {
  const auto& config = ctx.config;
  const PcnGapSettings settings = pcn_gap_settings(config);
  const bool zero = make_target(config.target).is_zero();
  const bool exact_ar1 = zero && config.kernel_kind == ProposalKind::pcn;

  std::vector<ChainSummary> summaries(config.m_list.size());
  parallel_for(config.m_list.size(), ctx.threads, [&](std::size_t i) {
    const std::size_t m = config.m_list[i];
    const MHKernel kernel = config.kernel_for(m);
    RngStream rng = ctx.root.replica(i);
    StateVector x0(static_cast<Eigen::Index>(m));
    const StationarySampler start =
        stationary_sampler(kernel, config, m, std::min(0.5, config.step.at(m)), settings.warm_burn_in, 1);
    start.make()(rng, x0);

    std::vector<double> series;
    series.reserve(config.n_steps);
    std::size_t accepted = 0;
    simulate(kernel, x0, config.n_steps, rng, [&](std::size_t, const StateVector& x, bool ok) {
      series.push_back(x[0]);
      accepted += ok ? 1 : 0;
    });
    ChainSummary& s = summaries[i];
    s.accepted = accepted;
    s.gap = gap_from_acf_linear(series, m, exact_ar1);
    s.iact = iact_and_variance(series);
    s.mean = ergodic_average(series, 0);
  });

  ExperimentResult result;
  result.experiment = to_string(config.experiment);
  std::vector<Estimate> gaps;
  bool all_accepted = true;
  bool gap_truth = true;
  bool iact_truth = true;
  bool mean_ok = true;
  json per_m = json::array();

  for (std::size_t i = 0; i < config.m_list.size(); ++i) {
    const std::size_t m = config.m_list[i];
    const double delta = config.step.at(m);
    const ChainSummary& s = summaries[i];
    const std::size_t n = config.n_steps;
    const double accept_rate = static_cast<double>(s.accepted) / static_cast<double>(n);
    result.rows.push_back(make_row(ctx, m, delta, "acceptance_rate", accept_rate, false, point(accept_rate), n));
    result.rows.push_back(row_from_report(ctx, delta, config.step.reported_exponent(), s.gap));
    gaps.push_back({s.gap.value, s.gap.std_error, n});

    // Batch-means gap through the AR(1) relation iact = (1 + r)/(1 - r).
    const double iact_se_batch = s.iact.iact_batch * std::sqrt(2.0 / static_cast<double>(s.iact.batches - 1));
    auto ar1_gap = [](double iact) { return 2.0 / (iact + 1.0); };
    result.rows.push_back(make_row(ctx, m, delta, to_string(GapMethod::batch_means), ar1_gap(s.iact.iact_batch), false,
                                   {ar1_gap(s.iact.iact_batch + 3.0 * iact_se_batch),
                                    ar1_gap(std::max(1e-12, s.iact.iact_batch - 3.0 * iact_se_batch))},
                                   n));
    const double iact_se_acf =
        s.iact.iact_acf * std::sqrt(2.0 * (2.0 * static_cast<double>(s.iact.acf_window) + 1.0) / static_cast<double>(n));
    result.rows.push_back(make_row(ctx, m, delta, "iact_acf", s.iact.iact_acf, false,
                                   {s.iact.iact_acf - 3.0 * iact_se_acf, s.iact.iact_acf + 3.0 * iact_se_acf}, n));
    result.rows.push_back(make_row(ctx, m, delta, "iact_batch", s.iact.iact_batch, false,
                                   {s.iact.iact_batch - 3.0 * iact_se_batch, s.iact.iact_batch + 3.0 * iact_se_batch},
                                   n));
    const double mean_se = s.iact.degenerate ? kNaN : std::sqrt(s.iact.sigma2_acf / static_cast<double>(n));
    result.rows.push_back(make_row(ctx, m, delta, "ergodic_mean_x1", s.mean.s_n, false,
                                   {s.mean.s_n - 3.0 * mean_se, s.mean.s_n + 3.0 * mean_se}, n));

    if (config.kernel_kind == ProposalKind::pcn && zero) {
      all_accepted = all_accepted && s.accepted == n;
      const double rho = KernelParams::pcn(delta).rho();
      const double r = 1.0 - rho;
      gap_truth = gap_truth && within_relative(s.gap.value, rho, settings.gap_tolerance);
      iact_truth = iact_truth && within_relative(s.iact.iact_acf, (1.0 + r) / (1.0 - r), settings.iact_tolerance);
      mean_ok = mean_ok && std::abs(s.mean.s_n) <= 3.0 * mean_se;
    }
    per_m.push_back({{"m", m},
                     {"accepted", s.accepted},
                     {"lag1_autocorrelation", s.gap.params["lag1_autocorrelation"]},
                     {"acf_window", s.iact.acf_window},
                     {"batches", s.iact.batches},
                     {"stationary_variance", s.iact.variance},
                     {"sigma2_acf", s.iact.sigma2_acf},
                     {"sigma2_batch", s.iact.sigma2_batch},
                     {"notes", s.gap.notes}});
  }
  result.extras["chains"] = per_m;

  std::string detail;
  const bool band = pooled_band(gaps, kThreeSigma, detail);
  result.verdicts.push_back({"gap_uniform_in_m", band, detail});
  if (config.kernel_kind == ProposalKind::pcn && zero) {
    result.verdicts.push_back({"pcn_always_accepts", all_accepted, "every proposal accepted at every m"});
    result.verdicts.push_back({"gap_matches_ar1", gap_truth,
                               "lag-1 gap within " + fmt(100 * settings.gap_tolerance) + "% of rho"});
    result.verdicts.push_back({"iact_matches_ar1", iact_truth,
                               "ACF IACT within " + fmt(100 * settings.iact_tolerance) + "% of (1+r)/(1-r)"});
    result.verdicts.push_back({"ergodic_mean_in_band", mean_ok, "|S_n| <= 3 sigma_hat / sqrt(n)"});
  }
  return result;
}

// ---------------------------------------------------------------------------
// rwm_decay

ExperimentResult run_rwm_decay(const Context& ctx) {
  const auto& config = ctx.config;
  const RwmDecaySettings settings = rwm_decay_settings(config);
  const double a = config.step.reported_exponent();

  std::vector<ConductanceResult> results;
  for (std::size_t i = 0; i < config.m_list.size(); ++i) {
    const std::size_t m = config.m_list[i];
    const MHKernel kernel = config.kernel_for(m);
    ConductanceOptions options;
    options.samples = config.n_steps;
    options.proposals_per_point = settings.proposals_per_point;
    options.threads = ctx.threads;
    RngStream rng = ctx.root.replica(i);
    results.push_back(conductance_bounds(
        kernel, stationary_sampler(kernel, config, m, settings.warm_delta, settings.warm_burn_in, settings.warm_thin),
        SobolevBall{settings.ball_sigma, std::sqrt(settings.ball_r)}, options, rng));
  }

  ExperimentResult result;
  result.experiment = to_string(config.experiment);
  RwmBoundParams bound_params = RwmBoundParams::defaults(a, settings.ball_r);
  bound_params.sigma = settings.ball_sigma;

  std::vector<double> acceptance, accept_mean_bound, analytic;
  bool respects_bound = true;
  std::string worst_excess = "none";
  json per_m = json::array();
  for (std::size_t i = 0; i < config.m_list.size(); ++i) {
    const std::size_t m = config.m_list[i];
    const double delta = config.step.at(m);
    const ConductanceResult& c = results[i];
    const std::size_t n = config.n_steps;
    result.rows.push_back(make_row(ctx, m, delta, "mean_acceptance", c.mean_acceptance.value, false,
                                   c.mean_acceptance.band(kThreeSigma), n));
    if (c.mean_acceptance_in_set.n > 0) {
      result.rows.push_back(make_row(ctx, m, delta, "mean_acceptance_in_set", c.mean_acceptance_in_set.value, false,
                                     c.mean_acceptance_in_set.band(kThreeSigma), c.mean_acceptance_in_set.n));
    }
    result.rows.push_back(make_row(ctx, m, delta, "set_mass", c.set_mass.value, false, c.set_mass.band(kThreeSigma), n));
    for (const auto& report : c.reports) result.rows.push_back(row_from_report(ctx, delta, a, report));

    const double bound = rwm_acceptance_bound(m, delta, bound_params);
    result.rows.push_back(make_row(ctx, m, delta, "rwm_acceptance_bound", bound, true, point(bound), 0));
    result.rows.push_back(row_from_report(ctx, delta, a, analytic_rwm_gap_bound(m, delta, bound_params)));

    acceptance.push_back(c.mean_acceptance.value);
    analytic.push_back(bound);
    for (const auto& report : c.reports)
      if (report.method == GapMethod::conductance_accept_mean) accept_mean_bound.push_back(report.raw_value);

    const double slack_all = bound + kThreeSigma * c.mean_acceptance.std_error - c.mean_acceptance.value;
    double slack_in = std::numeric_limits<double>::infinity();
    if (c.mean_acceptance_in_set.n > 0)
      slack_in = bound + kThreeSigma * c.mean_acceptance_in_set.std_error - c.mean_acceptance_in_set.value;
    if (slack_all < 0.0 || slack_in < 0.0) {
      respects_bound = false;
      worst_excess = "m=" + std::to_string(m);
    }
    per_m.push_back({{"m", m},
                     {"set_mass", c.set_mass.value},
                     {"set_rejected", c.set_rejected},
                     {"half_space_mass", c.half_space_mass.value},
                     {"bound_log", log_rwm_acceptance_bound(static_cast<double>(m), delta,
                                                            std::pow(static_cast<double>(m), -bound_params.b),
                                                            bound_params.r, bound_params.sigma)}});
  }

  // Informational: the polynomial-rate restatement m^p * bound(m) over the sweep.
  json rates = json::object();
  for (int p : {1, 2, 4}) {
    std::vector<double> scaled;
    for (std::size_t i = 0; i < config.m_list.size(); ++i)
      scaled.push_back(std::log(analytic[i]) + p * std::log(static_cast<double>(config.m_list[i])));
    rates["p" + std::to_string(p) + "_decreasing"] = strictly_decreasing(scaled);
  }
  result.extras["bound_rate"] = rates;
  result.extras["bound_params"] = {{"a", bound_params.a},
                                   {"b", bound_params.b},
                                   {"sigma", bound_params.sigma},
                                   {"r", bound_params.r}};
  result.extras["sweep"] = per_m;

  result.verdicts.push_back({"acceptance_strictly_decreasing", strictly_decreasing(acceptance),
                             "E_mu alpha over m_list"});
  result.verdicts.push_back({"accept_mean_bound_decreasing", strictly_decreasing(accept_mean_bound),
                             "4 E_mu alpha over m_list"});
  result.verdicts.push_back({"analytic_bound_decreasing", strictly_decreasing(analytic), "closed-form bound over m_list"});
  result.verdicts.push_back({"acceptance_respects_bound", respects_bound,
                             "mean acceptance <= bound + 3 se; first violation: " + worst_excess});
  return result;
}

// ---------------------------------------------------------------------------
// conductance_sweep

ExperimentResult run_conductance_sweep(const Context& ctx) {
  const auto& config = ctx.config;
  const ConductanceSettings settings = conductance_settings(config);
  ExperimentResult result;
  result.experiment = to_string(config.experiment);
  json slopes = json::array();

  for (std::size_t ai = 0; ai < settings.a_list.size(); ++ai) {
    const double a = settings.a_list[ai];
    std::vector<double> log_m, log_bound;
    for (std::size_t i = 0; i < config.m_list.size(); ++i) {
      const std::size_t m = config.m_list[i];
      const double delta = config.step.fixed ? *config.step.fixed : config.step.scale * std::pow(static_cast<double>(m), -a);
      if (config.kernel_kind == ProposalKind::pcn && delta > 0.5)
        throw ConfigError("/kernel/scaling", "pCN needs delta <= 1/2 (a=" + fmt(a) + ", m=" + std::to_string(m) + ")");
      const MHKernel kernel(config.kernel_kind, delta, make_target(config.target), GaussianMeasure(config.spectrum_for(m)));
      RngStream rng = ctx.root.replica(ai).chain(i);
      const GapReport half = half_space_bound(
          kernel, stationary_sampler(kernel, config, m, 0.18, settings.warm_burn_in, settings.warm_thin),
          config.n_steps, rng, ctx.threads);
      result.rows.push_back(row_from_report(ctx, delta, a, half));
      if (half.raw_value > 0.0) {
        log_m.push_back(std::log(static_cast<double>(m)));
        log_bound.push_back(std::log(half.raw_value));
      }
    }
    const LinearFit fit = fit_line(log_m, log_bound);
    slopes.push_back({{"a", a}, {"slope", fit.slope}, {"slope_std_error", fit.slope_std_error}, {"points", log_m.size()}});
    if (a >= 1.0) {
      const bool ok = log_m.size() >= 2 && std::abs(fit.slope + a / 2.0) <= settings.slope_tolerance;
      result.verdicts.push_back({"half_space_slope_a" + fmt(a), ok,
                                 "log-log slope " + fmt(fit.slope) + " vs " + fmt(-a / 2.0) + " +/- " +
                                     fmt(settings.slope_tolerance)});
    }
  }
  result.extras["slopes"] = slopes;

  if (settings.orthant_check) {
    const MHKernel kernel(ProposalKind::rwm, 0.5, zero_target(), GaussianMeasure(Spectrum::explicit_values({1.0})));
    RngStream rng = ctx.root.child(stream_tag("orthant"));
    GapReport half = half_space_bound(kernel, reference_sampler(kernel.measure()), settings.orthant_samples, rng, ctx.threads);
    SweepRow row = row_from_report(ctx, 0.5, 0.0, half);
    row.method = "conductance_half_space_orthant";
    result.rows.push_back(row);
    const bool ok = std::abs(half.raw_value - 0.5) <= kThreeSigma * half.std_error;
    result.verdicts.push_back({"orthant_exact_value", ok,
                               "m=1, delta=1/2: " + fmt(half.raw_value) + " vs 1/2, se " + fmt(half.std_error)});
  }
  return result;
}

// ---------------------------------------------------------------------------
// harris_verify

ContractionEstimate merge_contraction(ContractionEstimate a, const ContractionEstimate& b) {
  a.c_hat = std::max(a.c_hat, b.c_hat);
  a.ci = {std::max(a.ci.lo, b.ci.lo), std::max(a.ci.hi, b.ci.hi)};
  a.n_pairs += b.n_pairs;
  a.rejected_pairs += b.rejected_pairs;
  a.ratios.insert(a.ratios.end(), b.ratios.begin(), b.ratios.end());
  return a;
}

ExperimentResult run_harris_verify(const Context& ctx) {
  const auto& config = ctx.config;
  const HarrisSettings settings = harris_settings(config);
  settings.distance.validate();
  ExperimentResult result;
  result.experiment = to_string(config.experiment);
  json certificates = json::array();
  bool all_hold = true;
  bool lyapunov_exact = true;
  const bool zero = make_target(config.target).is_zero();
  const bool quadratic_v = std::holds_alternative<PowerNorm>(settings.distance.v_spec) &&
                           std::get<PowerNorm>(settings.distance.v_spec).power == 2;

  for (std::size_t i = 0; i < config.m_list.size(); ++i) {
    const std::size_t m = config.m_list[i];
    const double delta = config.step.at(m);
    const MHKernel kernel = config.kernel_for(m);
    const RngStream base = ctx.root.replica(i);

    RngStream lyap_rng = base.child(stream_tag("lyapunov"));
    const LyapunovEstimate lyap =
        estimate_lyapunov(kernel, settings.distance, settings.radii, settings.lyapunov_samples, lyap_rng, ctx.threads);

    const double separation = settings.distance.epsilon / 2.0;
    RngStream inner_rng = base.child(stream_tag("contraction_inner"));
    RngStream outer_rng = base.child(stream_tag("contraction_outer"));
    const ContractionEstimate contraction = merge_contraction(
        estimate_contraction(kernel, settings.distance, near_diagonal_sampler(m, 0.0, settings.inner_radius, separation),
                             settings.contraction_pairs, settings.contraction_trials, inner_rng, ctx.threads),
        estimate_contraction(kernel, settings.distance,
                             near_diagonal_sampler(m, settings.inner_radius, settings.outer_radius, separation),
                             settings.contraction_pairs, settings.contraction_trials, outer_rng, ctx.threads));

    const std::size_t min_steps = smallness_min_steps(kernel, settings.distance, lyap.k_hat);
    const std::size_t steps = std::max(min_steps, settings.smallness_steps);
    RngStream small_rng = base.child(stream_tag("smallness"));
    const SmallnessEstimate small = estimate_smallness(kernel, settings.distance, lyap.k_hat, steps,
                                                       settings.smallness_pairs, settings.smallness_trials, small_rng,
                                                       ctx.threads);
    const HarrisCertificate cert = harris_certificate(lyap, contraction, small);
    all_hold = all_hold && cert.premises_hold;

    const std::size_t lyap_n = settings.lyapunov_samples * settings.radii.size();
    result.rows.push_back(make_row(ctx, m, delta, "lyapunov_l", lyap.l_hat, false, lyap.l_ci, lyap_n));
    result.rows.push_back(make_row(ctx, m, delta, "lyapunov_K", lyap.k_hat, false, point(lyap.k_hat), lyap_n));
    result.rows.push_back(make_row(ctx, m, delta, "contraction_c", contraction.c_hat, false, contraction.ci,
                                   contraction.n_pairs * settings.contraction_trials));
    result.rows.push_back(make_row(ctx, m, delta, "smallness_s", small.s_hat, false, small.ci,
                                   small.n_pairs * settings.smallness_trials));
    result.rows.push_back(make_row(ctx, m, delta, "premises_hold", cert.premises_hold ? 1.0 : 0.0, false,
                                   point(cert.premises_hold ? 1.0 : 0.0), 0));

    json table = json::array();
    const double c2 = 1.0 - 2.0 * delta;
    const double trace = kernel.measure().spectrum().trace();
    for (const auto& row : lyap.table) {
      json entry = {{"radius", row.radius},
                    {"V", row.v_x},
                    {"expected_next", row.expected_next.value},
                    {"std_error", row.expected_next.std_error}};
      if (zero && quadratic_v) {
        const double exact = c2 * row.v_x + 2.0 * delta * trace;
        entry["exact"] = exact;
        lyapunov_exact = lyapunov_exact &&
                         std::abs(row.expected_next.value - exact) <= kThreeSigma * row.expected_next.std_error;
      }
      table.push_back(entry);
    }
    json c = cert.to_json();
    c["m"] = m;
    c["delta"] = delta;
    c["epsilon"] = settings.distance.epsilon;
    c["eta"] = settings.distance.eta;
    c["lyapunov"]["table"] = table;
    c["smallness"]["min_steps"] = min_steps;
    c["smallness"]["set_radius"] = small.set_radius;
    c["contraction"]["rejected_pairs"] = contraction.rejected_pairs;
    certificates.push_back(c);
  }
  result.extras["certificates"] = certificates;
  result.verdicts.push_back({"premises_hold", all_hold, "l, c and s upper confidence limits below 1 at every m"});
  if (zero && quadratic_v) {
    result.verdicts.push_back({"lyapunov_matches_exact", lyapunov_exact,
                               "E V(X_1) within 3 se of (1-2 delta)||x||^2 + 2 delta tr C at every radius"});
  }
  return result;
}

// ---------------------------------------------------------------------------
// ergodic_suite

ExperimentResult run_ergodic_suite(const Context& ctx) {
  const auto& config = ctx.config;
  const ErgodicSettings settings = ergodic_settings(config);
  ExperimentResult result;
  result.experiment = to_string(config.experiment);
  const bool zero = make_target(config.target).is_zero();
  const bool exact_ar1 = zero && config.kernel_kind == ProposalKind::pcn;

  std::vector<std::size_t> checkpoints = settings.mse_n;
  checkpoints.push_back(config.n_steps);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

  bool clt_ok = true, sigma_ok = true, mse_ok = true, slln_ok = true;
  json per_m = json::array();

  for (std::size_t i = 0; i < config.m_list.size(); ++i) {
    const std::size_t m = config.m_list[i];
    const double delta = config.step.at(m);
    const MHKernel kernel = config.kernel_for(m);
    const double lambda1 = kernel.measure().spectrum().lambda(0);
    const RngStream base = ctx.root.replica(i);
    const StationarySampler start = stationary_sampler(kernel, config, m, 0.18, 10000, 1);

    // averages[c][r]: replica r's ergodic average of x_1 at checkpoint c.
    std::vector<std::vector<double>> averages(checkpoints.size(), std::vector<double>(config.n_replicas));
    const RngStream replicas = base.child(stream_tag("replicas"));
    parallel_for(config.n_replicas, ctx.threads, [&](std::size_t r) {
      RngStream rng = replicas.replica(r);
      StateVector x0(static_cast<Eigen::Index>(m));
      start.make()(rng, x0);
      double sum = 0.0;
      std::size_t next = 0;
      simulate(kernel, x0, config.n_steps, rng, [&](std::size_t k, const StateVector& x, bool) {
        sum += x[0];
        if (next < checkpoints.size() && k == checkpoints[next]) {
          averages[next][r] = sum / static_cast<double>(k);
          ++next;
        }
      });
    });

    const std::optional<double> known_mean = zero ? std::optional<double>(0.0) : std::nullopt;
    const CltResult clt = clt_test(averages.back(), config.n_steps, known_mean);
    clt_ok = clt_ok && clt.passes;
    result.rows.push_back(make_row(ctx, m, delta, "clt_ks_statistic", clt.ks_statistic, false,
                                   {0.0, clt.critical_value}, clt.replicas));
    result.rows.push_back(make_row(ctx, m, delta, "clt_sigma2", clt.sigma2_hat, false,
                                   {clt.sigma2_hat * (1.0 - 3.0 * std::sqrt(2.0 / static_cast<double>(clt.replicas))),
                                    clt.sigma2_hat * (1.0 + 3.0 * std::sqrt(2.0 / static_cast<double>(clt.replicas)))},
                                   clt.replicas));
    json entry = {{"m", m}, {"clt", {{"ks", clt.ks_statistic}, {"critical", clt.critical_value}, {"sigma2", clt.sigma2_hat}}}};
    if (exact_ar1) {
      const double r = 1.0 - KernelParams::pcn(delta).rho();
      const double truth = lambda1 * lambda1 * (1.0 + r) / (1.0 - r);
      sigma_ok = sigma_ok && within_relative(clt.sigma2_hat, truth, settings.sigma2_tolerance);
      entry["clt"]["sigma2_truth"] = truth;
    }

    const double beta = settings.beta.value_or(
        config.kernel_kind == ProposalKind::pcn ? 1.0 - KernelParams::pcn(delta).rho() : kNaN);
    if (known_mean && std::isfinite(beta)) {
      for (std::size_t n : settings.mse_n) {
        const auto c = static_cast<std::size_t>(std::find(checkpoints.begin(), checkpoints.end(), n) - checkpoints.begin());
        std::vector<double> normalised(averages[c]);
        for (double& v : normalised) v /= lambda1;
        const Estimate mse = empirical_mse(normalised, *known_mean);
        const double bound = mse_bound(static_cast<double>(n), beta);
        mse_ok = mse_ok && mse.value <= bound;
        result.rows.push_back(make_row(ctx, m, delta, "mse_n" + std::to_string(n), mse.value, false,
                                       mse.band(kThreeSigma), config.n_replicas));
        result.rows.push_back(make_row(ctx, m, delta, "mse_bound_n" + std::to_string(n), bound, true, point(bound),
                                       config.n_replicas));
      }
      const double n0 = static_cast<double>(burn_in(settings.burn_in_p, beta, settings.density_ratio_norm));
      result.rows.push_back(make_row(ctx, m, delta, "burn_in", n0, false, point(n0), 0));
      entry["beta"] = beta;
    }

    if (known_mean) {
      StateVector far = StateVector::Zero(static_cast<Eigen::Index>(m));
      far[0] = settings.far_factor * std::sqrt(kernel.measure().spectrum().trace());
      RngStream slln_rng = base.child(stream_tag("slln"));
      const SllnResult slln = slln_probe(
          kernel, [](const StateVector& x) { return x[0]; }, *known_mean,
          {StateVector::Zero(static_cast<Eigen::Index>(m)), far}, settings.slln_n, slln_rng, ctx.threads);
      slln_ok = slln_ok && slln.passes;
      for (const auto& row : slln.rows) {
        result.rows.push_back(make_row(ctx, m, delta,
                                       "slln_error_start" + std::to_string(row.start) + "_n" + std::to_string(row.n),
                                       row.error, false, {0.0, row.threshold}, row.n));
      }
      entry["slln_far_start_norm"] = far[0];
    }
    per_m.push_back(entry);
  }
  result.extras["ergodic"] = per_m;
  result.verdicts.push_back({"clt_ks_passes", clt_ok, "KS at level 0.01 against N(0, sigma2_hat)"});
  if (exact_ar1) {
    result.verdicts.push_back({"clt_sigma2_matches_ar1", sigma_ok,
                               "sigma2_hat within " + fmt(100 * settings.sigma2_tolerance) + "% of the AR(1) value"});
  }
  if (zero) {
    result.verdicts.push_back({"mse_within_bound", mse_ok, "empirical MSE <= 2/(n(1-beta)) + 2/(n(1-beta))^2"});
    result.verdicts.push_back({"slln_errors_in_band", slln_ok, "final error <= 3 sigma_hat / sqrt(n) for every start"});
  }
  return result;
}

}  // namespace

void validate_experiment_options(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::pcn_uniform_gap: (void)pcn_gap_settings(config); break;
    case ExperimentKind::rwm_decay: (void)rwm_decay_settings(config); break;
    case ExperimentKind::harris_verify: (void)harris_settings(config); break;
    case ExperimentKind::ergodic_suite: (void)ergodic_settings(config); break;
    case ExperimentKind::conductance_sweep: (void)conductance_settings(config); break;
  }
}

bool ExperimentResult::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

json ExperimentResult::summary_json(const ExperimentConfig& config) const {
  json verdict_list = json::array();
  for (const auto& v : verdicts) verdict_list.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  return {{"experiment", experiment},
          {"name", config.name},
          {"seed", config.seed},
          {"m_list", config.m_list},
          {"n_steps", config.n_steps},
          {"n_replicas", config.n_replicas},
          {"spectrum", config.spectrum},
          {"target", config.target},
          {"kernel", {{"kind", to_string(config.kernel_kind)}}},
          {"passed", passed()},
          {"verdicts", verdict_list},
          {"details", extras}};
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  const Context ctx{config, std::max(1u, threads),
                    RngStream(config.seed, StreamKey{stream_tag(to_string(config.experiment)), 0, 0})};
  switch (config.experiment) {
    case ExperimentKind::pcn_uniform_gap: return run_pcn_uniform_gap(ctx);
    case ExperimentKind::rwm_decay: return run_rwm_decay(ctx);
    case ExperimentKind::harris_verify: return run_harris_verify(ctx);
    case ExperimentKind::ergodic_suite: return run_ergodic_suite(ctx);
    case ExperimentKind::conductance_sweep: return run_conductance_sweep(ctx);
  }
  throw std::logic_error("run_experiment: unhandled experiment kind");
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + directory.string() + ": " + ec.message());

  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
  };
  {
    auto out = open(directory / config.outputs.csv);
    write_sweep_csv(out, result.rows);
    if (!out) throw std::runtime_error("write failed for " + (directory / config.outputs.csv).string());
  }
  {
    auto out = open(directory / config.outputs.json);
    out << result.summary_json(config).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + (directory / config.outputs.json).string());
  }
  if (result.extras.contains("certificates")) {
    const json& certs = result.extras["certificates"];
    auto out = open(directory / "certificate.json");
    out << (certs.size() == 1 ? certs[0] : certs).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for certificate.json");
  }
}

}  // namespace fsmcmc
