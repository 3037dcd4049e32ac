#include "fsmcmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace fsmcmc {

std::string to_string(GapMethod method) {
  switch (method) {
    case GapMethod::acf_linear_functional: return "acf_linear_functional";
    case GapMethod::batch_means: return "batch_means";
    case GapMethod::conductance_accept_sup: return "conductance_accept_sup";
    case GapMethod::conductance_accept_mean: return "conductance_accept_mean";
    case GapMethod::conductance_half_space: return "conductance_half_space";
    case GapMethod::analytic_rwm_bound: return "analytic_rwm_bound";
  }
  return "unknown";
}

bool GapReport::has_note(const std::string& note) const {
  return std::find(notes.begin(), notes.end(), note) != notes.end();
}

namespace {

GapReport clamped_bound(GapMethod method, double raw, std::size_t m) {
  GapReport r;
  r.method = method;
  r.raw_value = raw;
  r.value = std::clamp(raw, 0.0, 1.0);
  r.is_upper_bound = true;
  r.m = m;
  if (raw >= 1.0) r.notes.emplace_back("vacuous");
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

ErgodicSummary ergodic_average(std::span<const double> series, std::size_t n0) {
  if (n0 >= series.size()) throw std::out_of_range("ergodic_average: burn-in n0 must be below the series length");
  ErgodicAverage avg(n0);
  for (double v : series) avg.push(v);
  ErgodicSummary s;
  s.s_n = avg.value();
  s.n = avg.count();
  s.n0 = n0;
  return s;
}

std::vector<double> functional_series(const ChainTrace& trace, const std::function<double(const StateVector&)>& f) {
  std::vector<double> out;
  out.reserve(trace.states.size());
  for (const auto& x : trace.states) out.push_back(f(x));
  return out;
}

ErgodicSummary ergodic_average(const ChainTrace& trace, const std::function<double(const StateVector&)>& f,
                               std::size_t n0) {
  const auto series = functional_series(trace, f);
  return ergodic_average(series, n0);
}

// ---------------------------------------------------------------------------

namespace {

/// Biased autocovariances gamma(0..max_lag) of a centred copy of the series.
std::vector<double> autocovariance(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::size_t size = 1;
  while (size < 2 * n) size <<= 1;
  std::vector<double> padded(size, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[i] = series[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& c : freq) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, freq);
  acov.resize(std::min(max_lag + 1, n));
  for (double& v : acov) v /= static_cast<double>(n);
  return acov;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag) {
  if (series.size() < 2) throw std::invalid_argument("autocorrelation: need at least two values");
  auto acov = autocovariance(series, max_lag);
  const double var = acov.front();
  if (!(var > 0.0)) throw std::domain_error("autocorrelation: series has zero variance");
  for (double& v : acov) v /= var;
  return acov;
}

IactEstimate iact_and_variance(std::span<const double> series) {
  constexpr std::size_t kMinLength = 1000;
  if (series.size() < kMinLength) throw std::invalid_argument("iact_and_variance: need at least 1000 values");
  IactEstimate out;
  out.n = series.size();
  const auto acov = autocovariance(series, series.size() - 1);
  out.variance = acov[0];
  if (!(out.variance > 0.0) ||
      out.variance <= 1e-28 * std::max(1.0, std::abs(series[0]) * std::abs(series[0]))) {
    out.degenerate = true;
    out.iact_acf = out.iact_batch = std::numeric_limits<double>::quiet_NaN();
    out.variance = 0.0;
    return out;
  }

  // Geyer's initial positive sequence: add pair sums while they stay positive.
  double pair_total = 0.0;
  std::size_t lag = 0;
  while (lag + 1 < acov.size()) {
    const double pair = acov[lag] + acov[lag + 1];
    if (!(pair > 0.0)) break;
    pair_total += pair;
    lag += 2;
  }
  out.acf_window = lag;
  out.sigma2_acf = std::max(0.0, -acov[0] + 2.0 * pair_total);
  out.iact_acf = out.sigma2_acf / out.variance;

  const std::size_t batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(series.size()))));
  const std::size_t length = series.size() / batches;
  RunningStats batch_means;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(b * length);
    batch_means.push(std::accumulate(first, first + static_cast<std::ptrdiff_t>(length), 0.0) /
                     static_cast<double>(length));
  }
  out.batches = batches;
  out.sigma2_batch = static_cast<double>(length) * batch_means.variance();
  out.iact_batch = out.sigma2_batch / out.variance;
  return out;
}

GapReport gap_from_acf_linear(std::span<const double> coordinate_series, std::size_t m, bool exact_ar1) {
  const auto rho = autocorrelation(coordinate_series, 1);
  const double r1 = rho.size() > 1 ? rho[1] : 0.0;
  const double n = static_cast<double>(coordinate_series.size());
  GapReport g;
  g.method = GapMethod::acf_linear_functional;
  g.value = g.raw_value = 1.0 - r1;
  g.is_upper_bound = false;
  g.std_error = std::sqrt(std::max(0.0, 1.0 - r1 * r1) / n);
  g.ci = Interval{g.value - kThreeSigma * g.std_error, g.value + kThreeSigma * g.std_error};
  g.m = m;
  g.n_samples = coordinate_series.size();
  g.params = {{"lag1_autocorrelation", r1}};
  if (!exact_ar1) g.notes.emplace_back("heuristic");
  return g;
}

// ---------------------------------------------------------------------------

StationarySampler reference_sampler(const GaussianMeasure& measure) {
  auto shared = std::make_shared<const GaussianMeasure>(measure);
  return {[shared] {
            return StationaryDraw([shared](RngStream& rng, StateVector& out) {
              if (static_cast<std::size_t>(out.size()) != shared->dimension())
                out.resize(static_cast<Eigen::Index>(shared->dimension()));
              shared->sample_into(rng, out);
            });
          },
          true};
}

StationarySampler warm_start_sampler(const MHKernel& pcn_kernel, std::size_t burn_in, std::size_t thin) {
  if (thin == 0) throw std::invalid_argument("warm_start_sampler: thin must be positive");
  auto kernel = std::make_shared<const MHKernel>(pcn_kernel);
  return {[kernel, burn_in, thin] {
            auto state = std::make_shared<std::optional<StateVector>>();
            return StationaryDraw([kernel, burn_in, thin, state](RngStream& rng, StateVector& out) {
              const std::size_t steps = state->has_value() ? thin : burn_in + 1;
              StateVector x = state->has_value() ? **state : StateVector::Zero(static_cast<Eigen::Index>(kernel->dimension()));
              simulate(*kernel, std::move(x), steps, rng, [&](std::size_t k, const StateVector& s, bool) {
                if (k == steps) *state = s;
              });
              out = **state;
            });
          },
          false};
}

namespace {

/// Sums for a ratio estimator E[g] / E[h].
struct RatioSums {
  double g = 0.0, h = 0.0, gg = 0.0, hh = 0.0, gh = 0.0;
  std::size_t n = 0;

  void push(double gv, double hv) {
    g += gv;
    h += hv;
    gg += gv * gv;
    hh += hv * hv;
    gh += gv * hv;
    ++n;
  }
  void merge(const RatioSums& o) {
    g += o.g;
    h += o.h;
    gg += o.gg;
    hh += o.hh;
    gh += o.gh;
    n += o.n;
  }
  Estimate ratio() const {
    const double nn = static_cast<double>(n);
    const double mg = g / nn;
    const double mh = h / nn;
    if (!(mh > 0.0)) return {std::numeric_limits<double>::quiet_NaN(), 0.0, n};
    const double r = mg / mh;
    const double vg = gg / nn - mg * mg;
    const double vh = hh / nn - mh * mh;
    const double cgh = gh / nn - mg * mh;
    const double var = std::max(0.0, vg - 2.0 * r * cgh + r * r * vh) / (mh * mh * nn);
    return {r, std::sqrt(var), n};
  }
};

struct ConductanceBlock {
  RunningStats accept_all;
  RunningStats accept_in_set;
  RunningStats in_set;
  RunningStats half_mass;
  RatioSums half;
  double sup_in_set = 0.0;
};

}  // namespace

ConductanceResult conductance_bounds(const MHKernel& kernel, const StationarySampler& sampler,
                                     const SobolevBall& set, const ConductanceOptions& options, RngStream& rng) {
  if (options.samples == 0 || options.block == 0 || options.proposals_per_point == 0)
    throw std::invalid_argument("conductance_bounds: sample counts must be positive");
  const std::size_t m = kernel.dimension();
  const std::size_t blocks = (options.samples + options.block - 1) / options.block;
  const double lambda1 = kernel.measure().spectrum().lambda(0);
  const double scale1 = kernel.params().noise_scale() * lambda1;
  const double mean_coeff = kernel.kind() == ProposalKind::pcn ? kernel.params().pcn_coefficient() : 1.0;
  std::vector<ConductanceBlock> parts(blocks);

  parallel_for(blocks, options.threads, [&](std::size_t b) {
    RngStream local = rng.replica(b);
    const StationaryDraw draw = sampler.make();
    const std::size_t count = std::min(options.block, options.samples - b * options.block);
    ConductanceBlock& part = parts[b];
    StateVector x(static_cast<Eigen::Index>(m));
    StateVector xi(static_cast<Eigen::Index>(m));
    StateVector y(static_cast<Eigen::Index>(m));
    for (std::size_t s = 0; s < count; ++s) {
      draw(local, x);
      const double u_x = kernel.potential(x);
      kernel.measure().sample_into(local, xi);
      kernel.propose_into(x, xi, y);
      part.accept_all.push(MHKernel::accept_from_log_ratio(u_x - kernel.potential(y)));

      const bool inside = set.contains(x);
      part.in_set.push(inside ? 1.0 : 0.0);
      if (inside) {
        double alpha_x = 0.0;
        for (std::size_t k = 0; k < options.proposals_per_point; ++k) {
          kernel.measure().sample_into(local, xi);
          kernel.propose_into(x, xi, y);
          alpha_x += MHKernel::accept_from_log_ratio(u_x - kernel.potential(y));
        }
        alpha_x /= static_cast<double>(options.proposals_per_point);
        part.accept_in_set.push(alpha_x);
        part.sup_in_set = std::max(part.sup_in_set, alpha_x);
      }

      const double in_a = x[0] >= 0.0 ? 1.0 : 0.0;
      const double mean1 = mean_coeff * x[0];
      double escape = 0.0;
      if (in_a > 0.0) escape = scale1 > 0.0 ? normal_cdf(-mean1 / scale1) : (mean1 < 0.0 ? 1.0 : 0.0);
      part.half.push(in_a * escape, in_a);
      part.half_mass.push(in_a);
    }
  });

  ConductanceBlock total;
  for (const auto& p : parts) {
    total.accept_all.merge(p.accept_all);
    total.accept_in_set.merge(p.accept_in_set);
    total.in_set.merge(p.in_set);
    total.half_mass.merge(p.half_mass);
    total.half.merge(p.half);
    total.sup_in_set = std::max(total.sup_in_set, p.sup_in_set);
  }

  ConductanceResult out;
  out.mean_acceptance = total.accept_all.estimate();
  out.mean_acceptance_in_set = total.accept_in_set.estimate();
  out.set_mass = total.in_set.estimate();
  out.half_space_mass = total.half_mass.estimate();
  out.set_rejected = out.set_mass.value > 0.5;
  const nlohmann::json base = {{"delta", kernel.params().delta()}, {"kind", to_string(kernel.kind())}};
  auto finish = [&](GapReport r) {
    r.n_samples = options.samples;
    r.params = base;
    if (!sampler.exact) r.notes.emplace_back("approximate_stationarity");
    return r;
  };

  if (!out.set_rejected && total.accept_in_set.count() > 0) {
    GapReport sup = clamped_bound(GapMethod::conductance_accept_sup, 2.0 * total.sup_in_set, m);
    sup = finish(std::move(sup));
    sup.params["set_sigma"] = set.sigma;
    sup.params["set_radius"] = set.radius;
    sup.params["set_mass"] = out.set_mass.value;
    out.reports.push_back(std::move(sup));
  }

  GapReport mean = clamped_bound(GapMethod::conductance_accept_mean, 4.0 * out.mean_acceptance.value, m);
  mean.std_error = 4.0 * out.mean_acceptance.std_error;
  mean.ci = Interval{4.0 * out.mean_acceptance.band(kThreeSigma).lo, 4.0 * out.mean_acceptance.band(kThreeSigma).hi};
  out.reports.push_back(finish(std::move(mean)));

  const Estimate ratio = total.half.ratio();
  GapReport half = clamped_bound(GapMethod::conductance_half_space, 2.0 * ratio.value, m);
  half.std_error = 2.0 * ratio.std_error;
  half.ci = Interval{2.0 * ratio.band(kThreeSigma).lo, 2.0 * ratio.band(kThreeSigma).hi};
  out.reports.push_back(finish(std::move(half)));
  return out;
}

GapReport half_space_bound(const MHKernel& kernel, const StationarySampler& sampler, std::size_t samples,
                           RngStream& rng, unsigned threads) {
  constexpr std::size_t kBlock = 4096;
  if (samples == 0) throw std::invalid_argument("half_space_bound: need samples");
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  const std::size_t m = kernel.dimension();
  const double scale1 = kernel.params().noise_scale() * kernel.measure().spectrum().lambda(0);
  const double mean_coeff = kernel.kind() == ProposalKind::pcn ? kernel.params().pcn_coefficient() : 1.0;
  std::vector<RatioSums> parts(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    RngStream local = rng.replica(b);
    const StationaryDraw draw = sampler.make();
    StateVector x(static_cast<Eigen::Index>(m));
    const std::size_t count = std::min(kBlock, samples - b * kBlock);
    for (std::size_t s = 0; s < count; ++s) {
      draw(local, x);
      const double in_a = x[0] >= 0.0 ? 1.0 : 0.0;
      const double mean1 = mean_coeff * x[0];
      double escape = 0.0;
      if (in_a > 0.0) escape = scale1 > 0.0 ? normal_cdf(-mean1 / scale1) : (mean1 < 0.0 ? 1.0 : 0.0);
      parts[b].push(in_a * escape, in_a);
    }
  });
  RatioSums total;
  for (const auto& p : parts) total.merge(p);
  const Estimate ratio = total.ratio();
  GapReport half = clamped_bound(GapMethod::conductance_half_space, 2.0 * ratio.value, m);
  half.std_error = 2.0 * ratio.std_error;
  half.ci = Interval{2.0 * ratio.band(kThreeSigma).lo, 2.0 * ratio.band(kThreeSigma).hi};
  half.n_samples = samples;
  half.params = {{"delta", kernel.params().delta()}, {"kind", to_string(kernel.kind())}};
  if (!sampler.exact) half.notes.emplace_back("approximate_stationarity");
  return half;
}

Estimate mean_acceptance(const MHKernel& kernel, const StationarySampler& sampler, std::size_t samples,
                         RngStream& rng, unsigned threads) {
  constexpr std::size_t kBlock = 4096;
  if (samples == 0) throw std::invalid_argument("mean_acceptance: need samples");
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  const auto m = static_cast<Eigen::Index>(kernel.dimension());
  std::vector<RunningStats> parts(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    RngStream local = rng.replica(b);
    const StationaryDraw draw = sampler.make();
    StateVector x(m), xi(m), y(m);
    const std::size_t count = std::min(kBlock, samples - b * kBlock);
    for (std::size_t s = 0; s < count; ++s) {
      draw(local, x);
      kernel.measure().sample_into(local, xi);
      kernel.propose_into(x, xi, y);
      parts[b].push(kernel.accept_prob(x, y));
    }
  });
  RunningStats total;
  for (const auto& p : parts) total.merge(p);
  return total.estimate();
}

// ---------------------------------------------------------------------------

RwmBoundParams RwmBoundParams::defaults(double a, double r) {
  return {a, 2.0 * (1.0 - a) / 3.0, (2.0 + a) / 6.0, r};
}

void RwmBoundParams::validate() const {
  if (!(a >= 0.0) || !std::isfinite(b) || !std::isfinite(sigma) || !(r >= 0.0))
    throw std::invalid_argument("RwmBoundParams: need a >= 0, finite b and sigma, r >= 0");
}

double log_rwm_acceptance_bound(double m, double delta, double lambda_holder, double r, double sigma) {
  if (!(m > 0.0) || !(delta > 0.0) || !(lambda_holder > 0.0 && lambda_holder <= 1.0) || !(r >= 0.0) ||
      !std::isfinite(sigma) || !std::isfinite(m) || !std::isfinite(delta))
    throw std::invalid_argument("rwm_acceptance_bound: parameters out of range");
  const double two_dl = 2.0 * delta * lambda_holder;
  const double decay = -0.5 * m * std::log1p(two_dl);
  const double growth = r * std::pow(m, 2.0 - 2.0 * sigma) * delta * lambda_holder * lambda_holder / (two_dl + 1.0);
  return decay + growth;
}

double rwm_acceptance_bound(double m, double delta, double lambda_holder, double r, double sigma) {
  return std::exp(log_rwm_acceptance_bound(m, delta, lambda_holder, r, sigma));
}

double rwm_acceptance_bound(std::size_t m, double delta, const RwmBoundParams& params) {
  params.validate();
  const double md = static_cast<double>(m);
  return rwm_acceptance_bound(md, delta, std::pow(md, -params.b), params.r, params.sigma);
}

GapReport analytic_rwm_gap_bound(std::size_t m, double delta, const RwmBoundParams& params) {
  GapReport g = clamped_bound(GapMethod::analytic_rwm_bound, 2.0 * rwm_acceptance_bound(m, delta, params), m);
  g.params = {{"delta", delta}, {"a", params.a}, {"b", params.b}, {"sigma", params.sigma}, {"r", params.r}};
  return g;
}

// ---------------------------------------------------------------------------

double mse_bound(double n, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("mse_bound: beta must lie in [0, 1)");
  if (!(n > 0.0)) throw std::invalid_argument("mse_bound: n must be positive");
  const double gap = 1.0 - beta;
  return 2.0 / (n * gap) + 2.0 / (n * n * gap * gap);
}

std::size_t burn_in(double p, double beta, double density_ratio_norm) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("burn_in: beta must lie in [0, 1)");
  if (!(p > 2.0)) throw std::domain_error("burn_in: p must exceed 2");
  if (!(density_ratio_norm >= 0.0)) throw std::domain_error("burn_in: density ratio norm must be >= 0");
  if (beta == 0.0 || density_ratio_norm == 0.0) return 0;
  const double factor = p < 4.0 ? p / (2.0 * (p - 2.0)) * std::log(32.0 * p / (p - 2.0)) : std::log(64.0);
  const double bound = factor * density_ratio_norm / std::log(1.0 / beta);
  return static_cast<std::size_t>(std::ceil(bound));
}

Estimate empirical_mse(std::span<const double> averages, double truth) {
  RunningStats sq;
  for (double a : averages) sq.push((a - truth) * (a - truth));
  return sq.estimate();
}

// ---------------------------------------------------------------------------

CltResult clt_test(std::span<const double> averages, std::size_t n, std::optional<double> mean) {
  constexpr std::size_t kMinReplicas = 200;
  if (averages.size() < kMinReplicas) throw std::invalid_argument("clt_test: need at least 200 replicas");
  if (n == 0) throw std::invalid_argument("clt_test: replicas must be nonempty");
  CltResult out;
  out.replicas = averages.size();
  out.n = n;
  RunningStats spread;
  for (double a : averages) spread.push(a);
  out.mean_used = mean.value_or(spread.mean());
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> z;
  z.reserve(averages.size());
  double second = 0.0;
  for (double a : averages) {
    z.push_back(root_n * (a - out.mean_used));
    second += z.back() * z.back();
  }
  out.sigma2_hat = mean ? second / static_cast<double>(z.size()) : static_cast<double>(n) * spread.variance();
  if (!(out.sigma2_hat > 0.0)) throw std::domain_error("clt_test: standardized sums are degenerate");
  const double sd = std::sqrt(out.sigma2_hat);
  out.ks_statistic = ks_statistic(z, [sd](double v) { return normal_cdf(v / sd); });
  out.critical_value = ks_critical_value(z.size(), 0.01);
  out.passes = out.ks_statistic <= out.critical_value;
  return out;
}

CltResult clt_test(const std::vector<std::vector<double>>& replica_series, std::optional<double> mean) {
  if (replica_series.empty()) throw std::invalid_argument("clt_test: no replicas");
  const std::size_t n = replica_series.front().size();
  std::vector<double> averages;
  averages.reserve(replica_series.size());
  for (const auto& s : replica_series) {
    if (s.size() != n || n == 0) throw std::invalid_argument("clt_test: replicas must share a nonzero length");
    averages.push_back(std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n));
  }
  return clt_test(averages, n, mean);
}

SllnResult slln_probe(const MHKernel& kernel, const std::function<double(const StateVector&)>& f,
                      double reference_mean, const std::vector<StateVector>& starts,
                      std::vector<std::size_t> n_grid, RngStream& rng, unsigned threads) {
  if (starts.empty() || n_grid.empty()) throw std::invalid_argument("slln_probe: need starts and an n grid");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.front() == 0) throw std::invalid_argument("slln_probe: grid entries must be positive");
  const std::size_t horizon = n_grid.back();
  std::vector<std::vector<SllnRow>> per_start(starts.size());
  std::vector<char> ok(starts.size(), 0);
  parallel_for(starts.size(), threads, [&](std::size_t s) {
    RngStream local = rng.replica(s);
    std::vector<double> series;
    series.reserve(horizon);
    simulate(kernel, starts[s], horizon, local,
             [&](std::size_t, const StateVector& x, bool) { series.push_back(f(x)); });
    const IactEstimate iact = iact_and_variance(series);
    const double sigma = iact.degenerate ? 0.0 : std::sqrt(iact.sigma2_acf);
    double running = 0.0;
    std::size_t next = 0;
    for (std::size_t k = 0; k < horizon && next < n_grid.size(); ++k) {
      running += series[k];
      if (k + 1 == n_grid[next]) {
        const double n = static_cast<double>(k + 1);
        per_start[s].push_back({s, k + 1, std::abs(running / n - reference_mean), 3.0 * sigma / std::sqrt(n)});
        ++next;
      }
    }
    ok[s] = per_start[s].back().error <= per_start[s].back().threshold;
  });
  SllnResult out;
  for (auto& rows : per_start) out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  out.start_passes.assign(ok.begin(), ok.end());
  out.passes = std::all_of(ok.begin(), ok.end(), [](char b) { return b != 0; });
  return out;
}

}  // namespace fsmcmc
