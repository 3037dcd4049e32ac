#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fsmcmc/diagnostics.hpp"

using namespace fsmcmc;

namespace {
MHKernel make(ProposalKind kind, double delta, std::size_t m, TargetDensity target = zero_target()) {
  return MHKernel(kind, delta, std::move(target), GaussianMeasure(Spectrum::power_law(1.0, m)));
}

std::vector<double> x1_series(const MHKernel& k, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> s;
  s.reserve(n);
  simulate(k, k.measure().sample(rng), n, rng, [&](std::size_t, const StateVector& x, bool) { s.push_back(x[0]); });
  return s;
}
}  // namespace

TEST_CASE("ergodic averages") {
  const std::vector<double> constant(50, 2.5);
  CHECK(ergodic_average(constant, 0).s_n == 2.5);
  CHECK(ergodic_average(constant, 49).n == 1);
  CHECK_THROWS_AS(ergodic_average(constant, 50), std::out_of_range);

  const std::vector<double> one{7.0};
  CHECK(ergodic_average(one, 0).s_n == 7.0);

  const std::vector<double> ramp{1, 2, 3, 4, 5};
  const ErgodicSummary tail = ergodic_average(ramp, 2);
  CHECK(tail.s_n == doctest::Approx(4.0));
  CHECK(tail.n == 3);

  ErgodicAverage stream(2);
  for (double v : ramp) stream.push(v);
  CHECK(stream.value() == doctest::Approx(4.0));

  const MHKernel k = make(ProposalKind::pcn, 0.18, 3);
  const ChainTrace trace = run_chain(k, StateVector::Ones(3), 10, 5);
  const ErgodicSummary s = ergodic_average(trace, [](const StateVector&) { return 1.0; }, 0);
  CHECK(s.s_n == 1.0);
  CHECK(s.n == 11);
}

TEST_CASE("ergodic average of pCN converges to the stationary mean") {
  const auto s = x1_series(make(ProposalKind::pcn, 0.18, 4), 1000000, 41);
  const ErgodicSummary avg = ergodic_average(s, 0);
  CHECK(std::abs(avg.s_n) <= 3.0 * std::sqrt(9.0 / 1e6));
}

TEST_CASE("IACT and asymptotic variance") {
  const auto iid = x1_series(make(ProposalKind::pcn, 0.5, 2), 200000, 42);
  const IactEstimate a = iact_and_variance(iid);
  CHECK(a.iact_acf == doctest::Approx(1.0).epsilon(0.1));
  CHECK(a.iact_batch == doctest::Approx(1.0).epsilon(0.1));

  const auto ar = x1_series(make(ProposalKind::pcn, 0.18, 2), 1000000, 43);
  const IactEstimate b = iact_and_variance(ar);
  CHECK(b.iact_acf == doctest::Approx(9.0).epsilon(0.15));
  CHECK(b.sigma2_acf == doctest::Approx(9.0).epsilon(0.15));
  CHECK(b.iact_batch == doctest::Approx(b.iact_acf).epsilon(0.2));
  CHECK(b.batches == 1000);
  CHECK(b.variance == doctest::Approx(1.0).epsilon(0.05));

  const std::vector<double> zeros(5000, 0.0);
  const IactEstimate z = iact_and_variance(zeros);
  CHECK(z.degenerate);
  CHECK(std::isnan(z.iact_acf));
  CHECK_THROWS(iact_and_variance(std::vector<double>(999, 1.0)));
}

TEST_CASE("autocorrelation by FFT matches the direct sum") {
  std::vector<double> s{1.0, 3.0, -2.0, 0.5, 4.0, -1.0, 2.0};
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  auto gamma = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < s.size(); ++i) acc += (s[i] - mean) * (s[i + k] - mean);
    return acc / s.size();
  };
  const auto rho = autocorrelation(s, 4);
  CHECK(rho[0] == doctest::Approx(1.0));
  for (std::size_t k = 1; k <= 4; ++k) CHECK(rho[k] == doctest::Approx(gamma(k) / gamma(0)).epsilon(1e-12));
}

TEST_CASE("gap from the lag-1 autocorrelation") {
  const GapReport iid = gap_from_acf_linear(x1_series(make(ProposalKind::pcn, 0.5, 2), 100000, 44), 2);
  CHECK(iid.value == doctest::Approx(1.0).epsilon(0.02));
  CHECK_FALSE(iid.is_upper_bound);

  const GapReport ar = gap_from_acf_linear(x1_series(make(ProposalKind::pcn, 0.18, 2), 1000000, 45), 2);
  CHECK(ar.value == doctest::Approx(0.2).epsilon(0.1));
  CHECK(ar.ci->lo <= 0.2);
  CHECK(ar.ci->hi >= 0.2);
  CHECK_FALSE(ar.has_note("heuristic"));

  const GapReport slow = gap_from_acf_linear(x1_series(make(ProposalKind::pcn, 1e-4, 2), 100000, 46), 2);
  CHECK(slow.value < 0.01);

  const auto tilt = x1_series(make(ProposalKind::pcn, 0.18, 2, norm_tilt(0.5)), 10000, 47);
  CHECK(gap_from_acf_linear(tilt, 2, false).has_note("heuristic"));
}

TEST_CASE("conductance bounds") {
  RngStream rng(48);
  ConductanceOptions opt;
  opt.samples = 20000;
  opt.threads = 2;
  const MHKernel p = make(ProposalKind::pcn, 0.2, 4);
  const ConductanceResult pr = conductance_bounds(p, reference_sampler(p.measure()), {1.0 / 3.0, 1.0}, opt, rng);
  CHECK(pr.mean_acceptance.value == 1.0);
  const GapReport* mean = nullptr;
  for (const auto& r : pr.reports)
    if (r.method == GapMethod::conductance_accept_mean) mean = &r;
  REQUIRE(mean != nullptr);
  CHECK(mean->value == 1.0);
  CHECK(mean->raw_value == 4.0);
  CHECK(mean->is_upper_bound);
  CHECK(mean->has_note("vacuous"));

  const MHKernel big_set = make(ProposalKind::rwm, 0.1, 4);
  const ConductanceResult rej = conductance_bounds(big_set, reference_sampler(big_set.measure()), {0.0, 100.0}, opt, rng);
  CHECK(rej.set_rejected);
  for (const auto& r : rej.reports) CHECK(r.method != GapMethod::conductance_accept_sup);
}

TEST_CASE("half-space bound reproduces the orthant value") {
  const MHKernel k(ProposalKind::rwm, 0.5, zero_target(), GaussianMeasure(Spectrum::explicit_values({1.0})));
  RngStream rng(49);
  const GapReport half = half_space_bound(k, reference_sampler(k.measure()), 400000, rng, 2);
  CHECK(std::abs(half.raw_value - 0.5) <= 3.0 * half.std_error);
  CHECK(half.is_upper_bound);
  RngStream again(49);
  CHECK(half_space_bound(k, reference_sampler(k.measure()), 400000, again, 1).raw_value == half.raw_value);
}

TEST_CASE("RWM mean acceptance falls with dimension") {
  RngStream rng(50);
  double previous = 2.0;
  for (std::size_t m : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
    const MHKernel k = make(ProposalKind::rwm, 0.1, m);
    RngStream local = rng.replica(m);
    const Estimate a = mean_acceptance(k, reference_sampler(k.measure()), 50000, local);
    CHECK(a.value < previous);
    previous = a.value;
  }
}

TEST_CASE("analytic RWM acceptance bound") {
  CHECK(rwm_acceptance_bound(1.0, 0.5, 1.0, 0.0, 1.0 / 3.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  const RwmBoundParams p = RwmBoundParams::defaults(0.0, 1.0);
  CHECK(p.b == doctest::Approx(2.0 / 3.0));
  CHECK(p.sigma == doctest::Approx(1.0 / 3.0));
  CHECK(rwm_acceptance_bound(std::size_t{32}, 0.1, p) == doctest::Approx(0.8054798365681282).epsilon(1e-12));
  CHECK(rwm_acceptance_bound(std::size_t{64}, 0.1, p) == doctest::Approx(0.7417409595735612).epsilon(1e-12));
  CHECK(std::isfinite(log_rwm_acceptance_bound(1e12, 0.1, 1e-8, 1.0, 1.0 / 3.0)));
  const GapReport g = analytic_rwm_gap_bound(32, 0.1, p);
  CHECK(g.is_upper_bound);
  CHECK(g.raw_value == doctest::Approx(2.0 * 0.8054798365681282).epsilon(1e-12));
}

TEST_CASE("RWM acceptance bound decays faster than any power, eventually") {
  // With the default exponents log bound ~ -c m^{1/3}; m^p bound(m) turns
  // decreasing only at large m, later for larger p and for a > 0.
  auto decreasing = [](double a, double delta_scale, int p, int k_from, int k_to) {
    const RwmBoundParams params = RwmBoundParams::defaults(a, 1.0);
    double previous = std::numeric_limits<double>::infinity();
    for (int k = k_from; k <= k_to; ++k) {
      const double m = std::ldexp(1.0, k);
      const double delta = delta_scale * std::pow(m, -a);
      const double v = log_rwm_acceptance_bound(m, delta, std::pow(m, -params.b), params.r, params.sigma) +
                       p * std::log(m);
      if (!(v < previous)) return false;
      previous = v;
    }
    return true;
  };
  for (int p : {1, 2, 4}) {
    CHECK(decreasing(0.0, 1.0, p, 11, 40));
    CHECK(decreasing(0.5, 1.0, p, 28, 50));
  }
  CHECK_FALSE(decreasing(0.0, 0.1, 4, 4, 10));
}

TEST_CASE("MC acceptance inside a Sobolev ball respects the bound") {
  const std::size_t m = 32;
  const double r = 3.0;
  const MHKernel k = make(ProposalKind::rwm, 0.1, m);
  RngStream rng(51);
  ConductanceOptions opt;
  opt.samples = 40000;
  const ConductanceResult c = conductance_bounds(k, reference_sampler(k.measure()), {1.0 / 3.0, std::sqrt(r)}, opt, rng);
  const double bound = rwm_acceptance_bound(m, 0.1, RwmBoundParams::defaults(0.0, r));
  CHECK(c.mean_acceptance_in_set.value <= bound + 3.0 * c.mean_acceptance_in_set.std_error);
  CHECK(c.mean_acceptance.value <= bound + 3.0 * c.mean_acceptance.std_error);
}

TEST_CASE("MSE bound and burn-in") {
  CHECK(mse_bound(1.0, 0.0) == 4.0);
  CHECK(mse_bound(100.0, 0.8) == doctest::Approx(0.105).epsilon(1e-12));
  CHECK_THROWS_AS(mse_bound(10.0, 1.0), std::domain_error);
  CHECK(burn_in(4.0, std::exp(-1.0), 1.0) == 5);
  CHECK(burn_in(std::numeric_limits<double>::infinity(), 0.9, 2.5) == 99);
  CHECK(burn_in(3.0, 0.5, 1.0) == 10);
  CHECK(burn_in(4.0, 0.5, 0.0) == 0);

  const std::vector<double> avgs{0.1, -0.1, 0.2, -0.2};
  CHECK(empirical_mse(avgs, 0.0).value == doctest::Approx(0.025));
}

TEST_CASE("CLT check") {
  RngStream rng(52);
  std::vector<double> averages;
  const std::size_t n = 100;
  for (int r = 0; r < 1000; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += rng.normal();
    averages.push_back(s / n);
  }
  const CltResult clt = clt_test(averages, n, 0.0);
  CHECK(clt.passes);
  CHECK(clt.sigma2_hat == doctest::Approx(1.0).epsilon(0.15));
  CHECK(clt.critical_value == doctest::Approx(ks_critical_value(1000, 0.01)));

  CHECK_THROWS_AS(clt_test(std::vector<double>(500, 1.0), n), std::domain_error);
  CHECK_THROWS_AS(clt_test(std::vector<double>(100, 1.0), n), std::invalid_argument);
}

TEST_CASE("SLLN probe") {
  const MHKernel k = make(ProposalKind::pcn, 0.18, 4);
  const double far = 10.0 * std::sqrt(k.measure().spectrum().trace());
  StateVector x_far = StateVector::Zero(4);
  x_far[0] = far;
  RngStream rng(53);
  const auto x1 = [](const StateVector& x) { return x[0]; };
  const SllnResult res = slln_probe(k, x1, 0.0, {StateVector::Zero(4), x_far}, {1000, 10000, 100000}, rng, 2);
  CHECK(res.passes);
  CHECK(res.rows.size() == 6);

  const SllnResult single = slln_probe(k, x1, 0.0, {StateVector::Zero(4)}, {5000}, rng);
  CHECK(single.rows.size() == 1);

  const auto capped = [](const StateVector& x) { return std::min(x.norm(), 10.0); };
  RngStream ref_rng(54);
  double total = 0.0;
  const std::size_t ref_n = 2000000;
  simulate(k, StateVector::Zero(4), ref_n, ref_rng, [&](std::size_t, const StateVector& x, bool) { total += capped(x); });
  const SllnResult lip = slln_probe(k, capped, total / ref_n, {StateVector::Zero(4), x_far}, {1000, 100000}, rng);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& first = lip.rows[2 * s];
    const auto& last = lip.rows[2 * s + 1];
    CHECK(last.error < first.error + first.threshold);
    CHECK(last.error <= last.threshold);
  }
}
