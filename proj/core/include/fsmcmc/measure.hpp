#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "fsmcmc/rng.hpp"
#include "fsmcmc/stats.hpp"

namespace fsmcmc {

/// Coefficients of a state in the Karhunen-Loeve eigenbasis.
using StateVector = Eigen::VectorXd;

/// Eigenvalue sequence of a truncated covariance operator. `lambda(i)` is
/// the standard deviation of coordinate i (so the covariance eigenvalue is
/// lambda(i)^2).
class Spectrum {
public:
  enum class Rule { power_law, explicit_values };

  /// lambda_i = i^{-q}, i = 1..m.
  static Spectrum power_law(double q, std::size_t m);
  /// Nonnegative, finite values. Zeros are allowed and pin a coordinate to 0.
  static Spectrum explicit_values(std::vector<double> lambdas);
  static Spectrum from_json(const nlohmann::json& j);

  Rule rule() const noexcept { return rule_; }
  double exponent() const noexcept { return q_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(lambdas_.size()); }
  /// 0-based index; coordinate i + 1 in the usual 1-based labelling.
  double lambda(std::size_t i) const { return lambdas_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& lambdas() const noexcept { return lambdas_; }
  double max_lambda() const noexcept;
  /// Trace of the covariance, sum lambda_i^2.
  double trace() const noexcept { return lambdas_.squaredNorm(); }
  bool strictly_positive() const noexcept;

  /// Same rule, first m coordinates (m may exceed the current dimension for
  /// power laws).
  Spectrum with_dimension(std::size_t m) const;

  nlohmann::json to_json() const;

private:
  Spectrum(Rule rule, double q, Eigen::VectorXd lambdas)
      : rule_(rule), q_(q), lambdas_(std::move(lambdas)) {}

  Rule rule_;
  double q_;
  Eigen::VectorXd lambdas_;
};

/// Centred Gaussian with independent coordinates, coordinate i ~ N(0, lambda_i^2).
class GaussianMeasure {
public:
  explicit GaussianMeasure(Spectrum spectrum) : spectrum_(std::move(spectrum)) {}

  const Spectrum& spectrum() const noexcept { return spectrum_; }
  std::size_t dimension() const noexcept { return spectrum_.dimension(); }

  StateVector sample(RngStream& rng) const;
  /// Writes a draw into `out`, which must already have the right size.
  void sample_into(RngStream& rng, Eigen::Ref<StateVector> out) const;

private:
  Spectrum spectrum_;
};

double norm(const StateVector& x);
/// (sum_i i^{2 sigma} x_i^2)^{1/2} with 1-based i.
double sobolev_norm(const StateVector& x, double sigma);
/// Keeps the first k coordinates and zeroes the rest.
StateVector project(const StateVector& x, std::size_t k);

/// Monte Carlo estimate of gamma_m(||xi|| <= R).
Estimate ball_probability(const GaussianMeasure& measure, double radius, std::size_t n, RngStream& rng);

/// Ball probabilities for nested truncations evaluated on shared draws: each
/// sample is one draw in the largest dimension, truncated to every entry of
/// `dims`.
struct NestedBallProbabilities {
  std::vector<std::size_t> dims;
  std::vector<Estimate> estimates;
  /// True when, for every shared draw, the indicator is nonincreasing in m.
  bool monotone_per_sample = true;
};

NestedBallProbabilities nested_ball_probabilities(const Spectrum& spectrum, double radius,
                                                  std::vector<std::size_t> dims, std::size_t n,
                                                  RngStream& rng);

/// Exact exponential moment E exp(beta ||u||^2) = prod_i (1 - 2 beta lambda_i^2)^{-1/2}.
/// Throws std::domain_error when 2 beta lambda_max^2 >= 1.
double fernique_moment(const GaussianMeasure& measure, double beta);

/// Upper bound on the tail integral of exp(alpha ||u||) over {||u|| >= K}:
///
///   F_beta (1 + alpha sqrt(pi / beta)) exp(-beta K^2 + alpha K).
///
/// The constant comes from the layer-cake formula plus Markov's inequality
/// gamma(||u|| >= t) <= F_beta e^{-beta t^2}; the remaining Gaussian integral
/// int_0^inf e^{-beta s^2} ds = sqrt(pi/beta)/2 is over-counted by a factor 2.
double exponential_tail_bound(const GaussianMeasure& measure, double alpha, double beta, double k);

}  // namespace fsmcmc
