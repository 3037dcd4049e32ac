#include "fsmcmc/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fsmcmc {

void DistanceParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("distance: epsilon must be positive");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("distance: eta must be >= 0");
  if (const auto* p = std::get_if<PowerNorm>(&v_spec); p && p->power < 1)
    throw std::invalid_argument("distance: V = ||x||^i needs i >= 1");
  if (const auto* e = std::get_if<ExpNorm>(&v_spec); e && !(e->rate > 0.0))
    throw std::invalid_argument("distance: V = exp(v ||x||) needs v > 0");
}

double v_eval(const DistanceParams& params, const StateVector& x) {
  const double r = x.norm();
  return std::visit(
      [r](const auto& spec) -> double {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, PowerNorm>) return std::pow(r, spec.power);
        else return std::exp(spec.rate * r);
      },
      params.v_spec);
}

double d_global(const StateVector& x, const StateVector& y, const DistanceParams& params) {
  return std::min(1.0, (x - y).norm() / params.epsilon);
}

LocalDistanceBounds d_local_bounds(const StateVector& x, const StateVector& y, const DistanceParams& params) {
  const double gap = (x - y).norm() / params.epsilon;
  const double r = std::max(x.norm(), y.norm());
  const double j = params.epsilon * std::exp(-params.eta * std::max(r - params.epsilon, 0.0));
  LocalDistanceBounds b;
  b.upper = gap * std::exp(params.eta * r);
  b.lower = gap * std::exp(params.eta * std::max(r - j, 0.0));
  b.valid_regime = b.upper < 1.0;
  return b;
}

double distance(const StateVector& x, const StateVector& y, const DistanceParams& params) {
  if (params.eta == 0.0) return d_global(x, y, params);
  return std::min(1.0, d_local_bounds(x, y, params).upper);
}

double d_tilde(double d_value, const StateVector& x, const StateVector& y, const DistanceParams& params) {
  if (!(d_value >= 0.0 && d_value <= 1.0)) throw std::invalid_argument("d_tilde: d must lie in [0, 1]");
  return std::sqrt(d_value * (1.0 + v_eval(params, x) + v_eval(params, y)));
}

CoupledStep coupled_step(const MHKernel& kernel, const CoupledPair& pair, RngStream& rng) {
  if (pair.x.size() != pair.y.size() || static_cast<std::size_t>(pair.x.size()) != kernel.dimension())
    throw std::invalid_argument("coupled_step: dimension mismatch");
  const StateVector xi = kernel.measure().sample(rng);
  const double u = rng.uniform();
  StateVector px = kernel.propose(pair.x, xi);
  StateVector py = kernel.propose(pair.y, xi);
  const bool accept_x = u < kernel.accept_prob(pair.x, px);
  const bool accept_y = u < kernel.accept_prob(pair.y, py);
  CoupledStep out;
  out.pair.x = accept_x ? std::move(px) : pair.x;
  out.pair.y = accept_y ? std::move(py) : pair.y;
  out.outcome = accept_x == accept_y ? (accept_x ? CouplingCase::both_accept : CouplingCase::both_reject)
                                     : CouplingCase::one_accepts;
  return out;
}

namespace {

StateVector random_direction(std::size_t dim, RngStream& rng) {
  StateVector u(static_cast<Eigen::Index>(dim));
  double len = 0.0;
  do {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.normal();
    len = u.norm();
  } while (len == 0.0);
  return u / len;
}

Interval widest(const std::vector<Estimate>& values, double z) {
  Interval out{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& e : values) {
    const Interval b = e.band(z);
    out.lo = std::max(out.lo, b.lo);
    out.hi = std::max(out.hi, b.hi);
  }
  return out;
}

}  // namespace

LyapunovEstimate estimate_lyapunov(const MHKernel& kernel, const std::function<double(const StateVector&)>& v,
                                   const std::vector<double>& radii, std::size_t samples, RngStream& rng,
                                   unsigned threads) {
  if (radii.empty()) throw std::invalid_argument("estimate_lyapunov: radius grid is empty");
  if (samples < 2) throw std::invalid_argument("estimate_lyapunov: need at least two samples per point");
  LyapunovEstimate out;
  out.seed = rng.seed();
  out.table.resize(radii.size());
  parallel_for(radii.size(), threads, [&](std::size_t i) {
    RngStream local = rng.replica(i);
    const StateVector x = radii[i] * random_direction(kernel.dimension(), local);
    RunningStats next;
    for (std::size_t s = 0; s < samples; ++s) next.push(v(kernel.step(x, local).next));
    out.table[i] = {radii[i], v(x), next.estimate()};
  });

  std::vector<double> vx;
  std::vector<double> upper;
  std::vector<double> lower;
  for (const auto& row : out.table) {
    vx.push_back(row.v_x);
    upper.push_back(row.expected_next.band(kThreeSigma).hi);
    lower.push_back(row.expected_next.band(kThreeSigma).lo);
  }
  const LinearFit fit = fit_line(vx, upper);
  out.l_hat = std::max(0.0, fit.slope);
  double intercept = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vx.size(); ++i) intercept = std::max(intercept, upper[i] - out.l_hat * vx[i]);
  out.k_hat = intercept;
  out.l_ci = {std::max(0.0, fit_line(vx, lower).slope), out.l_hat};
  out.drift_below_one = out.l_hat < 1.0;
  return out;
}

LyapunovEstimate estimate_lyapunov(const MHKernel& kernel, const DistanceParams& params,
                                   const std::vector<double>& radii, std::size_t samples, RngStream& rng,
                                   unsigned threads) {
  return estimate_lyapunov(
      kernel, [&params](const StateVector& x) { return v_eval(params, x); }, radii, samples, rng, threads);
}

PairSampler near_diagonal_sampler(std::size_t dim, double inner, double outer, double separation) {
  if (dim == 0 || !(inner >= 0.0) || !(outer >= inner) || !(separation > 0.0))
    throw std::invalid_argument("near_diagonal_sampler: bad shell or separation");
  return [=](RngStream& rng) {
    const double radius = inner + (outer - inner) * rng.uniform();
    CoupledPair pair;
    pair.x = radius * random_direction(dim, rng);
    pair.y = pair.x + separation * random_direction(dim, rng);
    return pair;
  };
}

ContractionEstimate estimate_contraction(const MHKernel& kernel, const DistanceParams& params,
                                         const PairSampler& sampler, std::size_t n_pairs,
                                         std::size_t trials, RngStream& rng, unsigned threads) {
  params.validate();
  if (n_pairs == 0 || trials < 2) throw std::invalid_argument("estimate_contraction: need pairs and >= 2 trials");
  std::vector<std::optional<Estimate>> slots(n_pairs);
  parallel_for(n_pairs, threads, [&](std::size_t p) {
    RngStream local = rng.replica(p);
    const CoupledPair pair = sampler(local);
    const double d0 = distance(pair.x, pair.y, params);
    if (!(d0 > 0.0 && d0 < 1.0)) return;
    RunningStats ratio;
    for (std::size_t t = 0; t < trials; ++t) {
      const CoupledStep s = coupled_step(kernel, pair, local);
      ratio.push(distance(s.pair.x, s.pair.y, params) / d0);
    }
    slots[p] = ratio.estimate();
  });
  ContractionEstimate out;
  out.seed = rng.seed();
  for (const auto& s : slots) {
    if (s) out.ratios.push_back(*s);
    else ++out.rejected_pairs;
  }
  out.n_pairs = out.ratios.size();
  if (out.ratios.empty()) throw std::runtime_error("estimate_contraction: every sampled pair was rejected");
  out.c_hat = std::max_element(out.ratios.begin(), out.ratios.end(),
                               [](const Estimate& a, const Estimate& b) { return a.value < b.value; })
                  ->value;
  out.ci = widest(out.ratios, kZ99);
  return out;
}

double sublevel_radius(const DistanceParams& params, double level) {
  if (!(level > 0.0)) return 0.0;
  return std::visit(
      [level](const auto& spec) -> double {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, PowerNorm>) return std::pow(level, 1.0 / spec.power);
        else return std::max(0.0, std::log(level) / spec.rate);
      },
      params.v_spec);
}

std::size_t smallness_min_steps(const MHKernel& kernel, const DistanceParams& params, double k_hat) {
  if (kernel.kind() != ProposalKind::pcn) throw std::invalid_argument("smallness_min_steps: defined for pCN only");
  const double radius = sublevel_radius(params, 4.0 * k_hat);
  const double coefficient = kernel.params().pcn_coefficient();
  const double start = 2.0 * radius / params.epsilon * std::exp(params.eta * radius);
  if (start <= 0.5) return 0;
  if (coefficient <= 0.0) return 1;
  return static_cast<std::size_t>(std::ceil(std::log(0.5 / start) / std::log(coefficient)));
}

SmallnessEstimate estimate_smallness(const MHKernel& kernel, const DistanceParams& params, double k_hat,
                                     std::size_t n_steps, std::size_t n_pairs, std::size_t trials,
                                     RngStream& rng, unsigned threads) {
  params.validate();
  if (n_pairs == 0 || trials < 2) throw std::invalid_argument("estimate_smallness: need pairs and >= 2 trials");
  const std::size_t needed = smallness_min_steps(kernel, params, k_hat);
  if (n_steps < needed)
    throw std::invalid_argument("estimate_smallness: n_steps = " + std::to_string(n_steps) +
                                " is below the contraction threshold " + std::to_string(needed));
  const double radius = sublevel_radius(params, 4.0 * k_hat);
  const auto dim = kernel.dimension();
  std::vector<Estimate> per_pair(n_pairs);
  parallel_for(n_pairs, threads, [&](std::size_t p) {
    RngStream local = rng.replica(p);
    CoupledPair start;
    if (p % 2 == 0) {
      start.x = radius * random_direction(dim, local);
      start.y = -start.x;
    } else {
      const StateVector origin = StateVector::Zero(static_cast<Eigen::Index>(dim));
      start.x = sample_in_ball(origin, radius, local);
      start.y = sample_in_ball(origin, radius, local);
    }
    RunningStats d;
    for (std::size_t t = 0; t < trials; ++t) {
      CoupledPair pair = start;
      for (std::size_t k = 0; k < n_steps; ++k) pair = coupled_step(kernel, pair, local).pair;
      d.push(distance(pair.x, pair.y, params));
    }
    per_pair[p] = d.estimate();
  });
  SmallnessEstimate out;
  out.seed = rng.seed();
  out.n_steps = n_steps;
  out.n_pairs = n_pairs;
  out.set_radius = radius;
  out.s_hat = std::max_element(per_pair.begin(), per_pair.end(),
                               [](const Estimate& a, const Estimate& b) { return a.value < b.value; })
                  ->value;
  out.ci = widest(per_pair, kZ99);
  return out;
}

nlohmann::json HarrisCertificate::to_json() const {
  using nlohmann::json;
  return {{"lyapunov", {{"l", lyapunov.l_hat}, {"K", lyapunov.k_hat}, {"ci", {lyapunov.l_ci.lo, lyapunov.l_ci.hi}}}},
          {"contraction",
           {{"c", contraction.c_hat}, {"ci", {contraction.ci.lo, contraction.ci.hi}}, {"n_pairs", contraction.n_pairs}}},
          {"smallness",
           {{"s", smallness.s_hat}, {"n_steps", smallness.n_steps}, {"ci", {smallness.ci.lo, smallness.ci.hi}}}},
          {"premises_hold", premises_hold},
          {"seeds", {{"lyapunov", lyapunov.seed}, {"contraction", contraction.seed}, {"smallness", smallness.seed}}}};
}

HarrisCertificate harris_certificate(const std::optional<LyapunovEstimate>& lyapunov,
                                     const std::optional<ContractionEstimate>& contraction,
                                     const std::optional<SmallnessEstimate>& smallness) {
  if (!lyapunov || !contraction || !smallness)
    throw std::invalid_argument("harris_certificate: lyapunov, contraction and smallness are all required");
  HarrisCertificate cert{*lyapunov, *contraction, *smallness, false};
  const double l = std::max(lyapunov->l_hat, lyapunov->l_ci.hi);
  const double c = std::max(contraction->c_hat, contraction->ci.hi);
  const double s = std::max(smallness->s_hat, smallness->ci.hi);
  cert.premises_hold = l < 1.0 && c < 1.0 && s < 1.0;
  return cert;
}

}  // namespace fsmcmc
