#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsmcmc/measure.hpp"
#include "fsmcmc/rng.hpp"
#include "fsmcmc/target.hpp"

namespace fsmcmc {

enum class ProposalKind { pcn, rwm };

std::string to_string(ProposalKind kind);
ProposalKind proposal_kind_from_string(const std::string& name);

/// Step size delta and the derived contraction rho = 1 - (1 - 2 delta)^{1/2}.
class KernelParams {
public:
  /// delta in (0, 1/2].
  static KernelParams pcn(double delta);
  /// Any delta > 0; rho is only defined for delta <= 1/2 and is NaN otherwise.
  static KernelParams rwm(double delta);

  double delta() const noexcept { return delta_; }
  double rho() const noexcept { return rho_; }
  /// (1 - 2 delta)^{1/2}, the pCN mean coefficient. Exactly 0 at delta = 1/2.
  double pcn_coefficient() const noexcept { return 1.0 - rho_; }
  /// (2 delta)^{1/2}, the noise scale shared by both proposals.
  double noise_scale() const noexcept { return noise_scale_; }

private:
  explicit KernelParams(double delta);
  double delta_;
  double rho_;
  double noise_scale_;
};

/// (1 - 2 delta)^{1/2} x + (2 delta)^{1/2} xi.
StateVector pcn_propose(const StateVector& x, const StateVector& xi, const KernelParams& params);
/// x + (2 delta)^{1/2} xi.
StateVector rwm_propose(const StateVector& x, const StateVector& xi, const KernelParams& params);

struct MHStep {
  StateVector next;
  bool accepted = false;
  StateVector proposal;
};

/// Metropolis-Hastings kernel with a Gaussian proposal built on the
/// reference measure. Proposal noise xi is drawn from gamma_m itself, so the
/// RWM proposal covariance is 2 delta C_m.
///
/// Acceptance is computed in log-space as 1 ^ exp(U(x) - U(y)) with the
/// potential U = Phi for pCN and U = Phi + (1/2) sum x_i^2 / lambda_i^2 for
/// RWM (the Cameron-Martin term). Immutable and shareable across threads.
class MHKernel {
public:
  MHKernel(ProposalKind kind, double delta, TargetDensity target, GaussianMeasure measure);

  ProposalKind kind() const noexcept { return kind_; }
  const KernelParams& params() const noexcept { return params_; }
  const TargetDensity& target() const noexcept { return target_; }
  const GaussianMeasure& measure() const noexcept { return measure_; }
  std::size_t dimension() const noexcept { return measure_.dimension(); }

  StateVector propose(const StateVector& x, const StateVector& xi) const;
  void propose_into(const StateVector& x, const StateVector& xi, StateVector& out) const;
  /// Mean of the proposal distribution started at x.
  StateVector proposal_mean(const StateVector& x) const;

  double potential(const StateVector& x) const;
  double log_accept_ratio(const StateVector& x, const StateVector& y) const {
    return potential(x) - potential(y);
  }
  double accept_prob(const StateVector& x, const StateVector& y) const {
    return accept_from_log_ratio(log_accept_ratio(x, y));
  }
  /// min(1, exp(r)); NaN (e.g. inf - inf) counts as certain rejection.
  static double accept_from_log_ratio(double log_ratio) noexcept;

  /// One transition: draws xi ~ gamma_m, then u ~ U[0,1), accepts iff u < alpha.
  MHStep step(const StateVector& x, RngStream& rng) const;

  /// Log density of Q(x, dy) w.r.t. Lebesgue measure. Needs all lambda_i > 0.
  double log_proposal_density(const StateVector& x, const StateVector& y) const;
  /// Log density of gamma_m w.r.t. Lebesgue measure. Needs all lambda_i > 0.
  double log_reference_density(const StateVector& x) const;

  nlohmann::json descriptor() const;

private:
  ProposalKind kind_;
  KernelParams params_;
  TargetDensity target_;
  GaussianMeasure measure_;
  Eigen::VectorXd inv_var_;  ///< 1 / lambda_i^2, RWM only
};

inline MHStep mh_step(const MHKernel& kernel, const StateVector& x, RngStream& rng) {
  return kernel.step(x, rng);
}

struct ChainTrace {
  std::vector<StateVector> states;  ///< X_0 .. X_n
  std::vector<bool> accept_flags;   ///< flag k belongs to the move X_k -> X_{k+1}
  std::uint64_t seed = 0;
  nlohmann::json kernel;

  std::size_t steps() const noexcept { return accept_flags.size(); }
  std::size_t dimension() const noexcept {
    return states.empty() ? 0 : static_cast<std::size_t>(states.front().size());
  }
};

/// Runs n steps from x0 on the stream RngStream(seed).
ChainTrace run_chain(const MHKernel& kernel, const StateVector& x0, std::size_t n, std::uint64_t seed);

/// Streams a chain without storing it: observer(k, X_k, accepted_k) is called
/// for k = 1..n. Consumes randomness exactly like repeated `step` calls.
template <class Observer>
void simulate(const MHKernel& kernel, StateVector x, std::size_t n, RngStream& rng, Observer&& observer) {
  const auto m = x.size();
  if (static_cast<std::size_t>(m) != kernel.dimension())
    throw std::invalid_argument("simulate: initial state has the wrong dimension");
  StateVector xi(m);
  StateVector y(m);
  double u_x = kernel.potential(x);
  for (std::size_t k = 1; k <= n; ++k) {
    kernel.measure().sample_into(rng, xi);
    kernel.propose_into(x, xi, y);
    const double u_y = kernel.potential(y);
    const double alpha = MHKernel::accept_from_log_ratio(u_x - u_y);
    const bool accepted = rng.uniform() < alpha;
    if (accepted) {
      std::swap(x, y);
      u_x = u_y;
    }
    observer(k, static_cast<const StateVector&>(x), accepted);
  }
}

}  // namespace fsmcmc
