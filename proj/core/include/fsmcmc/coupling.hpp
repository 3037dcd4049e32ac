#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsmcmc/kernel.hpp"
#include "fsmcmc/stats.hpp"

namespace fsmcmc {

/// V(x) = ||x||^i.
struct PowerNorm {
  int power = 2;
};
/// V(x) = exp(v ||x||).
struct ExpNorm {
  double rate = 0.1;
};
using LyapunovSpec = std::variant<PowerNorm, ExpNorm>;

/// Parameters of the distance-like function and the Lyapunov weight.
/// eta = 0 selects d(x,y) = 1 ^ ||x - y|| / eps; eta > 0 selects the
/// path-weighted distance, which is only ever evaluated through its
/// closed-form upper bound.
struct DistanceParams {
  double epsilon = 0.1;
  double eta = 0.0;
  LyapunovSpec v_spec = PowerNorm{2};

  void validate() const;
};

double v_eval(const DistanceParams& params, const StateVector& x);

double d_global(const StateVector& x, const StateVector& y, const DistanceParams& params);

struct LocalDistanceBounds {
  double lower = 0.0;
  double upper = 0.0;
  /// Whether the bounds apply: they are stated for points with upper < 1.
  bool valid_regime = true;
};

/// Closed-form two-sided bounds on the path-weighted distance
///   inf_psi (1/eps) int_0^T exp(eta ||psi(t)||) dt,
/// with r = ||x|| v ||y|| and J = eps exp(-eta ((r - eps) v 0)):
///   upper = ||x - y|| / eps * exp(eta r)
///   lower = ||x - y|| / eps * exp(eta ((r - J) v 0)).
LocalDistanceBounds d_local_bounds(const StateVector& x, const StateVector& y, const DistanceParams& params);

/// The distance used by the contraction and smallness estimators: d_global
/// when eta = 0, otherwise 1 ^ upper local bound.
double distance(const StateVector& x, const StateVector& y, const DistanceParams& params);

/// sqrt(d (1 + V(x) + V(y))).
double d_tilde(double d_value, const StateVector& x, const StateVector& y, const DistanceParams& params);

enum class CouplingCase { both_accept, both_reject, one_accepts };

struct CoupledPair {
  StateVector x;
  StateVector y;
};

struct CoupledStep {
  CoupledPair pair;
  CouplingCase outcome = CouplingCase::both_accept;
};

/// Basic coupling: one shared xi ~ gamma_m and one shared u ~ U[0,1).
CoupledStep coupled_step(const MHKernel& kernel, const CoupledPair& pair, RngStream& rng);

// ---------------------------------------------------------------------------
// Lyapunov drift

struct LyapunovRow {
  double radius = 0.0;
  double v_x = 0.0;
  Estimate expected_next;  ///< E[V(X_1) | X_0 = x]
};

struct LyapunovEstimate {
  double l_hat = 0.0;
  double k_hat = 0.0;
  Interval l_ci;
  bool drift_below_one = false;
  std::vector<LyapunovRow> table;
  std::uint64_t seed = 0;
};

/// One representative x per radius (uniform direction), `samples` one-step
/// draws each. The envelope is a least-squares line through the points
/// (V(x), mean + 3 se), with its intercept raised until it dominates all of
/// them. l_ci spans the slopes fitted through mean - 3 se and mean + 3 se.
LyapunovEstimate estimate_lyapunov(const MHKernel& kernel, const std::function<double(const StateVector&)>& v,
                                   const std::vector<double>& radii, std::size_t samples, RngStream& rng,
                                   unsigned threads = 1);
LyapunovEstimate estimate_lyapunov(const MHKernel& kernel, const DistanceParams& params,
                                   const std::vector<double>& radii, std::size_t samples, RngStream& rng,
                                   unsigned threads = 1);

// ---------------------------------------------------------------------------
// Contraction

using PairSampler = std::function<CoupledPair(RngStream&)>;

/// y = x + (separation) * uniform direction, with x uniform on the sphere of
/// radius drawn uniformly in [inner, outer].
PairSampler near_diagonal_sampler(std::size_t dim, double inner, double outer, double separation);

struct ContractionEstimate {
  double c_hat = 0.0;
  Interval ci;  ///< 99% band on the max ratio
  std::size_t n_pairs = 0;
  std::size_t rejected_pairs = 0;  ///< d(x,y) >= 1 or x = y
  std::vector<Estimate> ratios;
  std::uint64_t seed = 0;
};

/// For each accepted pair, `trials` coupled steps estimate E d(X_1, Y_1) / d(x, y).
/// c_hat is the largest per-pair mean; an upper estimate of the Wasserstein
/// contraction because the basic coupling need not be optimal.
ContractionEstimate estimate_contraction(const MHKernel& kernel, const DistanceParams& params,
                                         const PairSampler& sampler, std::size_t n_pairs,
                                         std::size_t trials, RngStream& rng, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Smallness

/// Radius of the sublevel set {V <= level}.
double sublevel_radius(const DistanceParams& params, double level);

/// Smallest n with the deterministic coupling bound below 1/2:
/// (1 - rho)^n diam(S) / eps * exp(eta R_S) <= 1/2.
std::size_t smallness_min_steps(const MHKernel& kernel, const DistanceParams& params, double k_hat);

struct SmallnessEstimate {
  double s_hat = 0.0;
  Interval ci;
  std::size_t n_steps = 0;
  std::size_t n_pairs = 0;
  double set_radius = 0.0;
  std::uint64_t seed = 0;
};

/// Pairs from S x S with S = {V <= 4 K}: alternately antipodal points on the
/// boundary and independent uniform points in the ball. Throws
/// std::invalid_argument when n_steps is below smallness_min_steps.
SmallnessEstimate estimate_smallness(const MHKernel& kernel, const DistanceParams& params, double k_hat,
                                     std::size_t n_steps, std::size_t n_pairs, std::size_t trials,
                                     RngStream& rng, unsigned threads = 1);

// ---------------------------------------------------------------------------

struct HarrisCertificate {
  LyapunovEstimate lyapunov;
  ContractionEstimate contraction;
  SmallnessEstimate smallness;
  bool premises_hold = false;

  nlohmann::json to_json() const;
};

/// Premises hold when the upper ends of the l, c and s bands are all below 1.
/// Throws std::invalid_argument if any estimate is missing.
HarrisCertificate harris_certificate(const std::optional<LyapunovEstimate>& lyapunov,
                                     const std::optional<ContractionEstimate>& contraction,
                                     const std::optional<SmallnessEstimate>& smallness);

}  // namespace fsmcmc
