#include "fsmcmc/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fsmcmc {

PhiProfile PhiProfile::global(double l) {
  if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("Lipschitz constant must be finite and >= 0");
  return {Kind::global_lipschitz, l, 0.0, 0.0};
}

PhiProfile PhiProfile::local(double m_kappa, double kappa) {
  if (!(m_kappa >= 0.0) || !(kappa > 0.0) || !std::isfinite(m_kappa) || !std::isfinite(kappa))
    throw std::invalid_argument("local Lipschitz envelope needs finite M >= 0 and kappa > 0");
  return {Kind::local_lipschitz, 0.0, m_kappa, kappa};
}

double PhiProfile::envelope(double r) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::global_lipschitz: return lipschitz;
    case Kind::local_lipschitz: return m_kappa * std::exp(kappa * r);
  }
  return std::numeric_limits<double>::infinity();
}

TargetDensity::TargetDensity(std::string name, Functional phi, PhiProfile profile, nlohmann::json params)
    : name_(std::move(name)), phi_(std::move(phi)), profile_(profile), params_(std::move(params)) {
  if (!phi_) throw std::invalid_argument("TargetDensity: empty functional");
}

nlohmann::json TargetDensity::descriptor() const {
  nlohmann::json j = params_.is_object() ? params_ : nlohmann::json::object();
  j["target"] = name_;
  return j;
}

TargetDensity zero_target() {
  return TargetDensity("zero", [](const StateVector&) { return 0.0; }, PhiProfile::zero());
}

TargetDensity norm_tilt(double lipschitz) {
  auto profile = PhiProfile::global(lipschitz);
  return TargetDensity(
      "norm_tilt", [lipschitz](const StateVector& x) { return lipschitz * x.norm(); }, profile,
      {{"L", lipschitz}});
}

TargetDensity power_tilt(double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("power_tilt: a must be finite and >= 0");
  const double m_kappa = 1.5 * a / std::sqrt(2.0 * std::exp(1.0));
  return TargetDensity(
      "power_tilt",
      [a](const StateVector& x) {
        const double r = x.norm();
        return a * r * std::sqrt(r);
      },
      PhiProfile::local(m_kappa, 1.0), {{"a", a}});
}

TargetDensity make_target(const nlohmann::json& config) {
  const std::string name = config.at("target").get<std::string>();
  if (name == "zero") return zero_target();
  if (name == "norm_tilt") return norm_tilt(config.at("L").get<double>());
  if (name == "power_tilt") return power_tilt(config.at("a").get<double>());
  throw std::invalid_argument("unknown target '" + name + "'");
}

double RadiusRule::operator()(double s) const {
  return std::visit(
      [s](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Constant>) return r.r;
        else return r.r * std::pow(s, r.a);
      },
      rule);
}

double AssumptionProfile::effective_radius(double s, double rho) const {
  return std::min(radius_rule(s), 0.5 * rho * s);
}

StateVector sample_in_ball(const StateVector& center, double radius, RngStream& rng) {
  const auto m = center.size();
  StateVector dir(m);
  double len = 0.0;
  do {
    for (Eigen::Index i = 0; i < m; ++i) dir[i] = rng.normal();
    len = dir.norm();
  } while (len == 0.0);
  const double scale = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(m));
  return center + (scale / len) * dir;
}

double local_lipschitz_estimate(const TargetDensity& target, std::size_t dim, double radius,
                                std::size_t probes, RngStream& rng) {
  if (!(radius > 0.0)) throw std::invalid_argument("local_lipschitz_estimate: radius must be positive");
  if (probes < 2) throw std::invalid_argument("local_lipschitz_estimate: need at least two probes");
  if (dim == 0) throw std::invalid_argument("local_lipschitz_estimate: dimension must be positive");
  const StateVector origin = StateVector::Zero(static_cast<Eigen::Index>(dim));
  const double step = 1e-4 * radius;
  double best = 0.0;
  auto quotient = [&](const StateVector& x, double phi_x, const StateVector& y) {
    const double dist = (x - y).norm();
    if (dist > 0.0) best = std::max(best, std::abs(phi_x - target.phi(y)) / dist);
  };
  StateVector previous = sample_in_ball(origin, radius, rng);
  double phi_previous = target.phi(previous);
  for (std::size_t k = 1; k < probes; ++k) {
    StateVector x = sample_in_ball(origin, radius, rng);
    const double phi_x = target.phi(x);
    quotient(previous, phi_previous, x);
    // Short radial segment: recovers the slope of radially varying Phi,
    // which independent pairs in high dimension almost never align with.
    const double len = x.norm();
    if (len > 0.0) {
      const double sign = len + step <= radius ? 1.0 : -1.0;
      quotient(x, phi_x, StateVector(x * (1.0 + sign * step / len)));
    }
    previous = std::move(x);
    phi_previous = phi_x;
  }
  return best;
}

double acceptance_floor_probe(const TargetDensity& target, const AssumptionProfile& profile,
                              double rho, const StateVector& x, std::size_t probes, RngStream& rng) {
  const double s = x.norm();
  if (s < profile.outer_radius) throw std::invalid_argument("acceptance_floor_probe: ||x|| is below R");
  if (probes == 0) throw std::invalid_argument("acceptance_floor_probe: need at least one probe");
  const StateVector center = (1.0 - rho) * x;
  const double ball = profile.effective_radius(s, rho);
  const double phi_x = target.phi(x);
  double floor = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < probes; ++k) {
    const StateVector z = sample_in_ball(center, ball, rng);
    floor = std::min(floor, std::exp(phi_x - target.phi(z)));
  }
  return floor;
}

}  // namespace fsmcmc
