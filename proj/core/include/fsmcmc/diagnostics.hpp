#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsmcmc/kernel.hpp"
#include "fsmcmc/stats.hpp"

namespace fsmcmc {

enum class GapMethod {
  acf_linear_functional,
  batch_means,
  conductance_accept_sup,
  conductance_accept_mean,
  conductance_half_space,
  analytic_rwm_bound,
};

std::string to_string(GapMethod method);

/// A spectral-gap estimate or an upper bound on the gap. Bounds are clamped
/// to [0, 1]; `raw_value` keeps the unclamped number.
struct GapReport {
  GapMethod method = GapMethod::acf_linear_functional;
  double value = 0.0;
  double raw_value = 0.0;
  bool is_upper_bound = false;
  std::optional<Interval> ci;
  double std_error = 0.0;
  std::size_t m = 0;
  std::size_t n_samples = 0;
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> notes;  ///< e.g. "vacuous", "heuristic", "approximate_stationarity"

  bool has_note(const std::string& note) const;
};

// ---------------------------------------------------------------------------
// Ergodic averages

/// Streaming S_{n,n0}(f): constant memory, single pass.
class ErgodicAverage {
public:
  explicit ErgodicAverage(std::size_t burn_in = 0) : burn_in_(burn_in) {}

  void push(double value) noexcept {
    if (seen_++ < burn_in_) return;
    ++n_;
    mean_ += (value - mean_) / static_cast<double>(n_);
  }
  double value() const noexcept { return mean_; }
  std::size_t count() const noexcept { return n_; }

private:
  std::size_t burn_in_;
  std::size_t seen_ = 0;
  std::size_t n_ = 0;
  double mean_ = 0.0;
};

struct ErgodicSummary {
  double s_n = 0.0;
  std::size_t n = 0;
  std::size_t n0 = 0;
  std::optional<double> sigma2_hat;
  std::optional<double> iact;
};

/// Average of series[n0], series[n0 + 1], ...; element k of the series is
/// read as X_{k+1}. Throws std::out_of_range unless n0 < series.size().
ErgodicSummary ergodic_average(std::span<const double> series, std::size_t n0);
ErgodicSummary ergodic_average(const ChainTrace& trace, const std::function<double(const StateVector&)>& f,
                               std::size_t n0);

/// Applies f to every state of a trace.
std::vector<double> functional_series(const ChainTrace& trace, const std::function<double(const StateVector&)>& f);

// ---------------------------------------------------------------------------
// Autocorrelation and asymptotic variance

/// Normalised autocorrelation rho(0..max_lag), biased (1/n) autocovariances,
/// computed by zero-padded FFT.
std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag);

struct IactEstimate {
  double variance = 0.0;  ///< stationary variance of f under the chain's law
  double iact_acf = 0.0;
  double sigma2_acf = 0.0;
  std::size_t acf_window = 0;  ///< number of lags summed
  double iact_batch = 0.0;
  double sigma2_batch = 0.0;
  std::size_t batches = 0;
  std::size_t n = 0;
  bool degenerate = false;  ///< zero variance; IACT undefined (NaN)
};

/// Integrated autocorrelation time and asymptotic variance, both by batch
/// means (floor(sqrt n) batches) and by the truncated ACF with Geyer's
/// initial positive sequence. Requires n >= 1000.
IactEstimate iact_and_variance(std::span<const double> series);

/// 1 - lag-1 autocorrelation of one coordinate. Only an estimate of the
/// operator gap for chains whose coordinates are exact AR(1) processes
/// (pCN on a Gaussian target); otherwise flagged "heuristic".
GapReport gap_from_acf_linear(std::span<const double> coordinate_series, std::size_t m, bool exact_ar1 = true);

// ---------------------------------------------------------------------------
// Conductance bounds

/// A stateful per-block stationary draw; `make` returns a fresh instance so
/// blocks can run independently.
using StationaryDraw = std::function<void(RngStream&, StateVector&)>;
struct StationarySampler {
  std::function<StationaryDraw()> make;
  bool exact = true;
};

/// Exact draws from gamma_m: the stationary law when Phi = 0.
StationarySampler reference_sampler(const GaussianMeasure& measure);
/// Approximate draws from mu: a pCN chain started at 0, burned in for
/// `burn_in` steps, then sampled every `thin` steps.
StationarySampler warm_start_sampler(const MHKernel& pcn_kernel, std::size_t burn_in, std::size_t thin);

/// B = {x : sobolev_norm(x, sigma) <= radius}.
struct SobolevBall {
  double sigma = 0.0;
  double radius = 1.0;

  bool contains(const StateVector& x) const { return sobolev_norm(x, sigma) <= radius; }
};

struct ConductanceOptions {
  std::size_t samples = 100000;          ///< stationary draws
  std::size_t proposals_per_point = 32;  ///< used for alpha(x) inside B
  std::size_t block = 4096;              ///< draws per independent stream
  unsigned threads = 1;
};

struct ConductanceResult {
  std::vector<GapReport> reports;
  Estimate mean_acceptance;           ///< E_mu alpha(x)
  Estimate mean_acceptance_in_set;    ///< E_mu[alpha(x) | x in B]
  Estimate set_mass;                  ///< mu(B)
  Estimate half_space_mass;           ///< mu(x_1 >= 0)
  bool set_rejected = false;          ///< mu(B) estimate above 1/2
};

/// Upper bounds on the L2 gap via Cheeger's inequality 1 - beta <= 2 C:
///   2 sup_{x in B} alpha(x)   (omitted when mu(B) > 1/2),
///   4 E_mu alpha(x),
///   2 int_A Q(x, A^c) dmu / mu(A) with A = {x_1 >= 0}.
/// alpha(x, y) is averaged over proposals (Rao-Blackwellised over u) and
/// Q(x, A^c) is the exact Gaussian tail of the proposal's first coordinate.
ConductanceResult conductance_bounds(const MHKernel& kernel, const StationarySampler& sampler,
                                     const SobolevBall& set, const ConductanceOptions& options, RngStream& rng);

/// Only the half-space bound 2 int_A Q(x, A^c) dmu / mu(A), A = {x_1 >= 0}.
GapReport half_space_bound(const MHKernel& kernel, const StationarySampler& sampler, std::size_t samples,
                           RngStream& rng, unsigned threads = 1);

/// Mean acceptance E_mu alpha(x) with one proposal per stationary draw.
Estimate mean_acceptance(const MHKernel& kernel, const StationarySampler& sampler, std::size_t samples,
                         RngStream& rng, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Analytic RWM acceptance bound

/// Exponents of the acceptance bound under delta_m = s m^{-a}.
struct RwmBoundParams {
  double a = 0.0;
  double b = 2.0 / 3.0;      ///< Hoelder exponent, lambda = m^{-b}
  double sigma = 1.0 / 3.0;  ///< smoothness of the ball B_r in H_sigma
  double r = 1.0;            ///< bound on sum_i i^{2 sigma} x_i^2

  /// b = 2(1 - a)/3, sigma = (2 + a)/6.
  static RwmBoundParams defaults(double a, double r);
  void validate() const;
};

/// (1 + 2 lambda delta)^{-m/2} exp(r m^{2 - 2 sigma} delta lambda^2 / (2 delta lambda + 1)),
/// evaluated in log-space. Bounds alpha(x) for RWM on the 1/i spectrum for
/// every x with sum_i i^{2 sigma} x_i^2 <= r.
double rwm_acceptance_bound(double m, double delta, double lambda_holder, double r, double sigma);
double log_rwm_acceptance_bound(double m, double delta, double lambda_holder, double r, double sigma);
/// The bound at lambda = m^{-b}.
double rwm_acceptance_bound(std::size_t m, double delta, const RwmBoundParams& params);

/// 2 * rwm_acceptance_bound as a gap report.
GapReport analytic_rwm_gap_bound(std::size_t m, double delta, const RwmBoundParams& params);

// ---------------------------------------------------------------------------
// Error bounds

/// 2/(n(1-beta)) + 2/(n^2 (1-beta)^2).
double mse_bound(double n, double beta);

/// Smallest natural number n0 with
///   n0 >= [p/(2(p-2)) log(32p/(p-2))] ||dnu/dmu - 1|| / log(1/beta)   for p in (2, 4)
///   n0 >= log(64) ||dnu/dmu - 1|| / log(1/beta)                       for p in [4, inf].
/// Pass p = infinity for the sup-norm case.
std::size_t burn_in(double p, double beta, double density_ratio_norm);

/// Mean squared error of replica averages against a known mean.
Estimate empirical_mse(std::span<const double> averages, double truth);

// ---------------------------------------------------------------------------
// CLT and SLLN probes

struct CltResult {
  double ks_statistic = 0.0;
  double critical_value = 0.0;  ///< level 0.01
  bool passes = false;
  double sigma2_hat = 0.0;
  double mean_used = 0.0;
  std::size_t replicas = 0;
  std::size_t n = 0;
};

/// Compares sqrt(n)(S_n - mean) across independent replicas with
/// N(0, sigma2_hat) by Kolmogorov-Smirnov at level 0.01. `mean` defaults to
/// the grand mean. Needs >= 200 replicas and nonzero spread.
CltResult clt_test(std::span<const double> averages, std::size_t n, std::optional<double> mean = {});
CltResult clt_test(const std::vector<std::vector<double>>& replica_series, std::optional<double> mean = {});

struct SllnRow {
  std::size_t start = 0;
  std::size_t n = 0;
  double error = 0.0;      ///< |S_n - reference|
  double threshold = 0.0;  ///< 3 sigma_hat / sqrt(n)
};

struct SllnResult {
  std::vector<SllnRow> rows;
  std::vector<bool> start_passes;  ///< final error within threshold
  bool passes = false;
};

/// Runs one chain per start to the largest n in the grid and tabulates the
/// ergodic-average error at every grid point. sigma_hat comes from the ACF
/// estimate of each run; the largest grid point must be >= 1000.
SllnResult slln_probe(const MHKernel& kernel, const std::function<double(const StateVector&)>& f,
                      double reference_mean, const std::vector<StateVector>& starts,
                      std::vector<std::size_t> n_grid, RngStream& rng, unsigned threads = 1);

}  // namespace fsmcmc
