#include "fsmcmc/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fsmcmc {

std::string to_string(ProposalKind kind) { return kind == ProposalKind::pcn ? "pcn" : "rwm"; }

ProposalKind proposal_kind_from_string(const std::string& name) {
  if (name == "pcn") return ProposalKind::pcn;
  if (name == "rwm") return ProposalKind::rwm;
  throw std::invalid_argument("unknown proposal kind '" + name + "'");
}

KernelParams::KernelParams(double delta)
    : delta_(delta),
      rho_(delta <= 0.5 ? 1.0 - std::sqrt(1.0 - 2.0 * delta) : std::numeric_limits<double>::quiet_NaN()),
      noise_scale_(std::sqrt(2.0 * delta)) {}

KernelParams KernelParams::pcn(double delta) {
  if (!(delta > 0.0 && delta <= 0.5)) throw std::invalid_argument("pCN step size delta must lie in (0, 1/2]");
  return KernelParams(delta);
}

KernelParams KernelParams::rwm(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("RWM step size delta must be positive");
  return KernelParams(delta);
}

namespace {
void check_dims(const StateVector& x, const StateVector& xi) {
  if (x.size() != xi.size()) throw std::invalid_argument("proposal: dimension mismatch");
}
}  // namespace

StateVector pcn_propose(const StateVector& x, const StateVector& xi, const KernelParams& params) {
  check_dims(x, xi);
  return params.pcn_coefficient() * x + params.noise_scale() * xi;
}

StateVector rwm_propose(const StateVector& x, const StateVector& xi, const KernelParams& params) {
  check_dims(x, xi);
  return x + params.noise_scale() * xi;
}

MHKernel::MHKernel(ProposalKind kind, double delta, TargetDensity target, GaussianMeasure measure)
    : kind_(kind),
      params_(kind == ProposalKind::pcn ? KernelParams::pcn(delta) : KernelParams::rwm(delta)),
      target_(std::move(target)),
      measure_(std::move(measure)) {
  if (kind_ == ProposalKind::rwm) {
    if (!measure_.spectrum().strictly_positive())
      throw std::invalid_argument("RWM needs a strictly positive spectrum (Cameron-Martin term)");
    inv_var_ = measure_.spectrum().lambdas().array().square().inverse();
  }
}

void MHKernel::propose_into(const StateVector& x, const StateVector& xi, StateVector& out) const {
  check_dims(x, xi);
  if (kind_ == ProposalKind::pcn)
    out.noalias() = params_.pcn_coefficient() * x + params_.noise_scale() * xi;
  else
    out.noalias() = x + params_.noise_scale() * xi;
}

StateVector MHKernel::propose(const StateVector& x, const StateVector& xi) const {
  StateVector out(x.size());
  propose_into(x, xi, out);
  return out;
}

StateVector MHKernel::proposal_mean(const StateVector& x) const {
  return kind_ == ProposalKind::pcn ? StateVector(params_.pcn_coefficient() * x) : x;
}

double MHKernel::potential(const StateVector& x) const {
  double u = target_.phi(x);
  if (kind_ == ProposalKind::rwm) u += 0.5 * (x.array().square() * inv_var_.array()).sum();
  return u;
}

double MHKernel::accept_from_log_ratio(double log_ratio) noexcept {
  if (std::isnan(log_ratio)) return 0.0;
  if (log_ratio >= 0.0) return 1.0;
  return std::exp(log_ratio);
}

MHStep MHKernel::step(const StateVector& x, RngStream& rng) const {
  if (static_cast<std::size_t>(x.size()) != dimension()) throw std::invalid_argument("mh_step: dimension mismatch");
  MHStep out;
  const StateVector xi = measure_.sample(rng);
  out.proposal = propose(x, xi);
  const double alpha = accept_prob(x, out.proposal);
  out.accepted = rng.uniform() < alpha;
  out.next = out.accepted ? out.proposal : x;
  return out;
}

double MHKernel::log_proposal_density(const StateVector& x, const StateVector& y) const {
  const auto& l = measure_.spectrum().lambdas();
  const StateVector mean = proposal_mean(x);
  const double two_delta = 2.0 * params_.delta();
  double out = 0.0;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double var = two_delta * l[i] * l[i];
    if (!(var > 0.0)) throw std::domain_error("log_proposal_density: degenerate coordinate");
    const double d = y[i] - mean[i];
    out += -0.5 * d * d / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
  }
  return out;
}

double MHKernel::log_reference_density(const StateVector& x) const {
  const auto& l = measure_.spectrum().lambdas();
  double out = 0.0;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double var = l[i] * l[i];
    if (!(var > 0.0)) throw std::domain_error("log_reference_density: degenerate coordinate");
    out += -0.5 * x[i] * x[i] / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
  }
  return out;
}

nlohmann::json MHKernel::descriptor() const {
  return {{"kind", to_string(kind_)},
          {"delta", params_.delta()},
          {"target", target_.descriptor()},
          {"spectrum", measure_.spectrum().to_json()}};
}

ChainTrace run_chain(const MHKernel& kernel, const StateVector& x0, std::size_t n, std::uint64_t seed) {
  ChainTrace trace;
  trace.seed = seed;
  trace.kernel = kernel.descriptor();
  trace.states.reserve(n + 1);
  trace.accept_flags.reserve(n);
  trace.states.push_back(x0);
  RngStream rng(seed);
  simulate(kernel, x0, n, rng, [&](std::size_t, const StateVector& x, bool accepted) {
    trace.states.push_back(x);
    trace.accept_flags.push_back(accepted);
  });
  return trace;
}

}  // namespace fsmcmc
