#include <doctest.h>

#include <cmath>

#include "fsmcmc/target.hpp"

using namespace fsmcmc;

namespace {
StateVector vec(std::initializer_list<double> v) {
  StateVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}
}  // namespace

TEST_CASE("built-in potentials") {
  CHECK(zero_target().phi(vec({1, 2, 3})) == 0.0);
  CHECK(norm_tilt(2.0).phi(vec({3, 4})) == doctest::Approx(10.0));
  CHECK(power_tilt(1.0).phi(vec({4, 0})) == doctest::Approx(8.0));
  const auto t = power_tilt(0.7);
  CHECK(t.phi(vec({0.3, -1.2})) == t.phi(vec({0.3, -1.2})));
}

TEST_CASE("targets from config") {
  CHECK(make_target({{"target", "zero"}}).is_zero());
  const TargetDensity t = make_target({{"target", "norm_tilt"}, {"L", 2.0}});
  CHECK(t.name() == "norm_tilt");
  CHECK(t.profile().lipschitz == 2.0);
  CHECK(t.descriptor()["L"] == 2.0);
  CHECK_THROWS(make_target({{"target", "banana"}}));
}

TEST_CASE("local Lipschitz estimates") {
  RngStream rng(11);
  CHECK(local_lipschitz_estimate(zero_target(), 4, 3.0, 100, rng) == 0.0);

  const double est = local_lipschitz_estimate(norm_tilt(2.0), 8, 5.0, 2000, rng);
  CHECK(est > 1.99);
  CHECK(est <= 2.0 + 1e-9);

  const TargetDensity power = power_tilt(1.0);
  for (double r : {0.5, 1.0, 4.0, 9.0}) {
    const double e = local_lipschitz_estimate(power, 6, r, 2000, rng);
    CHECK(e <= 1.5 * std::sqrt(r) + 1e-9);
    CHECK(e <= power.profile().envelope(r));
  }
  CHECK_THROWS(local_lipschitz_estimate(power, 6, 1.0, 1, rng));
}

TEST_CASE("declared envelope of the power tilt") {
  const PhiProfile p = power_tilt(1.0).profile();
  CHECK(p.m_kappa == doctest::Approx(1.5 / std::sqrt(2.0 * std::exp(1.0))));
  CHECK(p.envelope(0.5) == doctest::Approx(1.5 * std::sqrt(0.5)));
  for (double r = 0.01; r < 20.0; r *= 1.3) CHECK(p.envelope(r) >= 1.5 * std::sqrt(r) - 1e-12);
}

TEST_CASE("acceptance floor probe") {
  RngStream rng(12);
  AssumptionProfile profile;
  profile.outer_radius = 1.0;
  profile.radius_rule.rule = RadiusRule::Power{0.25, 1.0};
  const StateVector x = vec({8, 0, 0});
  CHECK(acceptance_floor_probe(zero_target(), profile, 0.2, x, 50, rng) == 1.0);
  CHECK(acceptance_floor_probe(norm_tilt(1.0), profile, 0.2, x, 5000, rng) >= std::exp(-3.6));
  CHECK(profile.effective_radius(8.0, 0.2) == doctest::Approx(0.8));
  CHECK_THROWS_AS(acceptance_floor_probe(norm_tilt(1.0), profile, 0.2, vec({0.5, 0, 0}), 5, rng),
                  std::invalid_argument);

  RngStream a(13), b(13);
  const double single = acceptance_floor_probe(norm_tilt(1.0), profile, 0.2, x, 1, a);
  const StateVector z = sample_in_ball(0.8 * x, 0.8, b);
  CHECK(single == doctest::Approx(std::exp(8.0 - z.norm())).epsilon(1e-14));
}

TEST_CASE("ball sampling stays inside the ball") {
  RngStream rng(14);
  const StateVector c = vec({1, -1, 2});
  for (int i = 0; i < 1000; ++i) CHECK((sample_in_ball(c, 0.5, rng) - c).norm() <= 0.5 + 1e-12);
}
