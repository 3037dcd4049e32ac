#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "fsmcmc/measure.hpp"
#include "fsmcmc/rng.hpp"

namespace fsmcmc {

/// Declared Lipschitz behaviour of Phi.
struct PhiProfile {
  enum class Kind { zero, global_lipschitz, local_lipschitz };

  Kind kind = Kind::zero;
  double lipschitz = 0.0;  ///< L for global_lipschitz
  double m_kappa = 0.0;    ///< envelope prefactor for local_lipschitz
  double kappa = 0.0;      ///< envelope rate for local_lipschitz

  static PhiProfile zero() { return {}; }
  static PhiProfile global(double l);
  static PhiProfile local(double m_kappa, double kappa);

  /// Declared upper bound on the local Lipschitz constant phi(r) on B_r(0).
  double envelope(double r) const;
};

/// Phi in mu(dx) ∝ exp(-Phi(x)) gamma(dx). The normalising constant is never
/// needed: Metropolis-Hastings only uses differences of Phi.
class TargetDensity {
public:
  using Functional = std::function<double(const StateVector&)>;

  TargetDensity(std::string name, Functional phi, PhiProfile profile, nlohmann::json params = {});

  double phi(const StateVector& x) const { return phi_(x); }
  const std::string& name() const noexcept { return name_; }
  const PhiProfile& profile() const noexcept { return profile_; }
  bool is_zero() const noexcept { return profile_.kind == PhiProfile::Kind::zero; }
  /// Name plus parameters, in the config representation.
  nlohmann::json descriptor() const;

private:
  std::string name_;
  Functional phi_;
  PhiProfile profile_;
  nlohmann::json params_;
};

/// Phi = 0, so the target is the reference Gaussian itself.
TargetDensity zero_target();
/// Phi(x) = L ||x||; globally Lipschitz with constant L.
TargetDensity norm_tilt(double lipschitz);
/// Phi(x) = a ||x||^{3/2}; phi(r) = (3/2) a sqrt(r) <= M e^{r} with
/// M = (3/2) a / sqrt(2e) (the maximum of sqrt(r) e^{-r} is at r = 1/2).
TargetDensity power_tilt(double a);

/// Builds a built-in from {"target": name, ...params}.
TargetDensity make_target(const nlohmann::json& config);

/// Growth rule r(s) for the acceptance-floor ball radius.
struct RadiusRule {
  struct Constant {
    double r;
  };
  struct Power {
    double r;
    double a;  ///< in (1/2, 1)
  };
  std::variant<Constant, Power> rule = Constant{1.0};

  double operator()(double s) const;
};

/// Constants of the acceptance-floor assumption: radius R beyond which the
/// floor exp(alpha_l) must hold, and the ball-radius rule.
struct AssumptionProfile {
  double outer_radius = 1.0;  ///< R
  double alpha_l = 0.0;
  RadiusRule radius_rule;

  /// r(s) clamped to rho s / 2; shrinking the ball only weakens the floor.
  double effective_radius(double s, double rho) const;
};

/// Uniform draw from B_r(center) in the ambient dimension: isotropic
/// direction times r U^{1/m}.
StateVector sample_in_ball(const StateVector& center, double radius, RngStream& rng);

/// Largest |Phi(x) - Phi(y)| / ||x - y|| over sampled pairs in B_r(0) of
/// dimension `dim`. A lower bound on the true local constant phi(r).
double local_lipschitz_estimate(const TargetDensity& target, std::size_t dim, double radius,
                                std::size_t probes, RngStream& rng);

/// Smallest sampled exp(Phi(x) - Phi(z)) over z in B_{r_eff(||x||)}((1 - rho) x).
/// Throws std::invalid_argument when ||x|| < R.
double acceptance_floor_probe(const TargetDensity& target, const AssumptionProfile& profile,
                              double rho, const StateVector& x, std::size_t probes, RngStream& rng);

}  // namespace fsmcmc
