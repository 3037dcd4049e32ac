#include "fsmcmc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fsmcmc {

Spectrum Spectrum::power_law(double q, std::size_t m) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("power law exponent q must be positive");
  if (m == 0) throw std::invalid_argument("spectrum dimension must be positive");
  Eigen::VectorXd values(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) values[static_cast<Eigen::Index>(i)] = std::pow(static_cast<double>(i + 1), -q);
  return Spectrum(Rule::power_law, q, std::move(values));
}

Spectrum Spectrum::explicit_values(std::vector<double> lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("explicit spectrum must be nonempty");
  for (double l : lambdas)
    if (!(l >= 0.0) || !std::isfinite(l))
      throw std::invalid_argument("explicit spectrum values must be finite and nonnegative");
  Eigen::VectorXd values = Eigen::Map<const Eigen::VectorXd>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
  return Spectrum(Rule::explicit_values, 0.0, std::move(values));
}

Spectrum Spectrum::from_json(const nlohmann::json& j) {
  const std::string rule = j.at("rule").get<std::string>();
  if (rule == "power_law") return power_law(j.at("q").get<double>(), j.at("m").get<std::size_t>());
  if (rule == "explicit") return explicit_values(j.at("lambdas").get<std::vector<double>>());
  throw std::invalid_argument("unknown spectrum rule '" + rule + "'");
}

double Spectrum::max_lambda() const noexcept { return lambdas_.maxCoeff(); }

bool Spectrum::strictly_positive() const noexcept { return (lambdas_.array() > 0.0).all(); }

Spectrum Spectrum::with_dimension(std::size_t m) const {
  if (rule_ == Rule::power_law) return power_law(q_, m);
  if (m == 0 || m > dimension()) throw std::invalid_argument("explicit spectrum cannot be extended");
  return Spectrum(rule_, q_, lambdas_.head(static_cast<Eigen::Index>(m)));
}

nlohmann::json Spectrum::to_json() const {
  if (rule_ == Rule::power_law) return {{"rule", "power_law"}, {"q", q_}, {"m", dimension()}};
  return {{"rule", "explicit"}, {"lambdas", std::vector<double>(lambdas_.begin(), lambdas_.end())}};
}

StateVector GaussianMeasure::sample(RngStream& rng) const {
  StateVector x(static_cast<Eigen::Index>(dimension()));
  sample_into(rng, x);
  return x;
}

void GaussianMeasure::sample_into(RngStream& rng, Eigen::Ref<StateVector> out) const {
  const auto& l = spectrum_.lambdas();
  if (out.size() != l.size()) throw std::invalid_argument("sample_into: dimension mismatch");
  for (Eigen::Index i = 0; i < l.size(); ++i) out[i] = l[i] * rng.normal();
}

double norm(const StateVector& x) { return x.norm(); }

double sobolev_norm(const StateVector& x, double sigma) {
  if (!std::isfinite(sigma)) throw std::invalid_argument("sobolev_norm: sigma must be finite");
  if (sigma == 0.0) return x.norm();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    sum += std::pow(static_cast<double>(i + 1), 2.0 * sigma) * x[i] * x[i];
  return std::sqrt(sum);
}

StateVector project(const StateVector& x, std::size_t k) {
  if (k > static_cast<std::size_t>(x.size())) throw std::out_of_range("project: k exceeds dimension");
  StateVector out = StateVector::Zero(x.size());
  out.head(static_cast<Eigen::Index>(k)) = x.head(static_cast<Eigen::Index>(k));
  return out;
}

Estimate ball_probability(const GaussianMeasure& measure, double radius, std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("ball_probability: need at least one sample");
  RunningStats hits;
  StateVector x(static_cast<Eigen::Index>(measure.dimension()));
  for (std::size_t s = 0; s < n; ++s) {
    measure.sample_into(rng, x);
    // Closed ball; R = 0 still has probability zero for a nondegenerate measure.
    hits.push(radius > 0.0 && x.norm() <= radius ? 1.0 : 0.0);
  }
  return hits.estimate();
}

NestedBallProbabilities nested_ball_probabilities(const Spectrum& spectrum, double radius,
                                                  std::vector<std::size_t> dims, std::size_t n,
                                                  RngStream& rng) {
  if (dims.empty() || n == 0) throw std::invalid_argument("nested_ball_probabilities: empty request");
  std::sort(dims.begin(), dims.end());
  if (dims.front() == 0) throw std::invalid_argument("nested_ball_probabilities: dimensions must be positive");
  const GaussianMeasure full(spectrum.with_dimension(dims.back()));
  std::vector<RunningStats> hits(dims.size());
  NestedBallProbabilities out;
  out.dims = dims;
  StateVector xi(static_cast<Eigen::Index>(dims.back()));
  for (std::size_t s = 0; s < n; ++s) {
    full.sample_into(rng, xi);
    double partial = 0.0;
    std::size_t filled = 0;
    bool previous = true;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      for (; filled < dims[d]; ++filled) partial += xi[static_cast<Eigen::Index>(filled)] * xi[static_cast<Eigen::Index>(filled)];
      const bool inside = radius > 0.0 && std::sqrt(partial) <= radius;
      if (inside && !previous) out.monotone_per_sample = false;
      previous = inside;
      hits[d].push(inside ? 1.0 : 0.0);
    }
  }
  for (const auto& h : hits) out.estimates.push_back(h.estimate());
  return out;
}

double fernique_moment(const GaussianMeasure& measure, double beta) {
  const double lmax = measure.spectrum().max_lambda();
  if (!std::isfinite(beta) || 2.0 * beta * lmax * lmax >= 1.0)
    throw std::domain_error("fernique_moment: exponential moment is infinite for this beta");
  // log-sum for long spectra
  double log_moment = 0.0;
  for (double l : measure.spectrum().lambdas()) log_moment -= 0.5 * std::log1p(-2.0 * beta * l * l);
  return std::exp(log_moment);
}

double exponential_tail_bound(const GaussianMeasure& measure, double alpha, double beta, double k) {
  if (!(alpha >= 0.0) || !(beta > 0.0)) throw std::domain_error("exponential_tail_bound: need alpha >= 0, beta > 0");
  if (!(k > alpha / (2.0 * beta))) throw std::domain_error("exponential_tail_bound: need K > alpha / (2 beta)");
  const double f_beta = fernique_moment(measure, beta);
  const double constant = f_beta * (1.0 + alpha * std::sqrt(std::numbers::pi / beta));
  return constant * std::exp(-beta * k * k + alpha * k);
}

}  // namespace fsmcmc
