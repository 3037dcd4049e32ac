#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace fsmcmc {

/// Two-sided normal quantiles used for confidence bands.
inline constexpr double kThreeSigma = 3.0;
inline constexpr double kZ99 = 2.5758293035489004;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// A Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  Interval band(double z) const { return {value - z * std_error, value + z * std_error}; }
};

/// Welford accumulator; mergeable, so replica results can be reduced in any
/// fixed order.
class RunningStats {
public:
  void push(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& other) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double std_error() const noexcept {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  Estimate estimate() const noexcept { return {mean_, std_error(), n_}; }

private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double normal_cdf(double x) noexcept;

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic_two_sample(std::span<const double> a, std::span<const double> b);

/// Asymptotic Kolmogorov critical value for a one-sample test at `level`
/// (supported: 0.10, 0.05, 0.01, 0.001), with Stephens' finite-n correction.
double ks_critical_value(std::size_t n, double level);

/// Critical value of the two-sample test with sizes n1, n2.
double ks_critical_value_two_sample(std::size_t n1, std::size_t n2, double level);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. With fewer than two
/// distinct abscissae the slope is 0 and the intercept is the mean of y.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Runs body(i) for i in [0, count) on `threads` workers with a static
/// contiguous partition. Bodies must write only to their own slot.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Number of worker threads used when none is requested explicitly.
unsigned default_thread_count() noexcept;

}  // namespace fsmcmc
