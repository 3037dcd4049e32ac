#include <doctest.h>

#include <atomic>
#include <vector>

#include "fsmcmc/stats.hpp"

using namespace fsmcmc;

TEST_CASE("running stats merge equals a single pass") {
  RunningStats all, left, right;
  for (int i = 0; i < 100; ++i) {
    const double x = 0.37 * i - 0.001 * i * i;
    all.push(x);
    (i < 40 ? left : right).push(x);
  }
  left.merge(right);
  CHECK(left.count() == 100);
  CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-13));
  CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(normal_cdf(-2.5) == doctest::Approx(0.006209665325776132).epsilon(1e-12));
}

TEST_CASE("Kolmogorov-Smirnov statistics") {
  const std::vector<double> x{0.1, 0.4, 0.35, 0.8};
  CHECK(ks_statistic(x, [](double v) { return v; }) == doctest::Approx(0.35));
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{2.5, 3.5, 5, 6, 7};
  CHECK(ks_statistic_two_sample(a, b) == doctest::Approx(0.6));
  CHECK(ks_critical_value(100, 0.01) == doctest::Approx(0.16069489685124866).epsilon(1e-12));
  CHECK_THROWS_AS(ks_critical_value(100, 0.02), std::invalid_argument);
}

TEST_CASE("line fit recovers an exact line") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{3, 5, 7, 9};
  const LinearFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.slope_std_error == doctest::Approx(0.0));
  const std::vector<double> same{2, 2};
  const std::vector<double> vals{1, 3};
  CHECK(fit_line(same, vals).intercept == doctest::Approx(2.0));
}

TEST_CASE("parallel_for visits every index once for any thread count") {
  for (unsigned threads : {1u, 2u, 5u}) {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) CHECK(h == 1);
  }
}
