#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "fsmcmc/config.hpp"
#include "fsmcmc/coupling.hpp"
#include "fsmcmc/diagnostics.hpp"
#include "fsmcmc/experiments.hpp"

using namespace fsmcmc;

namespace {

constexpr std::uint64_t kSeed = 20240701;

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      passed = false;
      detail << "[fail] ";
    }
    detail << what << "; ";
  }
};

int failures = 0;

void report(int id, const std::string& title, Outcome& o, double seconds) {
  if (!o.passed) ++failures;
  std::printf("%s criterion %d (%s) %.1fs: %s\n", o.passed ? "PASS" : "FAIL", id, title.c_str(), seconds,
              o.detail.str().c_str());
  std::fflush(stdout);
}

template <class F>
void criterion(int id, const std::string& title, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.passed = false;
    o.detail << "exception: " << e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(id, title, o, seconds);
}

std::string fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

MHKernel kernel(ProposalKind kind, double delta, std::size_t m, TargetDensity target = zero_target()) {
  return MHKernel(kind, delta, std::move(target), GaussianMeasure(Spectrum::power_law(1.0, m)));
}

const unsigned kThreads = default_thread_count();

struct PcnRun {
  std::size_t m = 0;
  std::size_t accepted = 0;
  std::vector<double> x1;
  double seconds = 0.0;
};

std::vector<PcnRun> pcn_runs;

void run_pcn_chains() {
  const std::vector<std::size_t> dims{1, 8, 64, 512};
  const std::size_t n = 1000000;
  pcn_runs.assign(dims.size(), {});
  const RngStream root(kSeed, StreamKey{stream_tag("pcn"), 0, 0});
  parallel_for(dims.size(), kThreads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    PcnRun& run = pcn_runs[i];
    run.m = dims[i];
    run.x1.reserve(n);
    const MHKernel k = kernel(ProposalKind::pcn, 0.18, dims[i]);
    RngStream rng = root.replica(i);
    simulate(k, k.measure().sample(rng), n, rng, [&](std::size_t, const StateVector& x, bool accepted) {
      run.accepted += accepted ? 1 : 0;
      run.x1.push_back(x[0]);
    });
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
}

std::filesystem::path config_path(const std::string& name) {
  return std::filesystem::path(FSMCMC_CONFIG_DIR) / name;
}

}  // namespace

int main() {
  std::printf("acceptance run: seed %llu, %u threads\n", static_cast<unsigned long long>(kSeed), kThreads);

  criterion(1, "pCN always accepts on the reference", [](Outcome& o) {
    const auto start = std::chrono::steady_clock::now();
    run_pcn_chains();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& run : pcn_runs)
      o.require(run.accepted == run.x1.size(),
                "m=" + std::to_string(run.m) + " accepted " + std::to_string(run.accepted) + "/" +
                    std::to_string(run.x1.size()));
    o.require(seconds < 60.0, "wall time " + fmt(seconds) + "s < 60s");
  });

  criterion(2, "basic coupling contracts at (1-2 delta)^{n/2}", [](Outcome& o) {
    for (double delta : {1e-3, 1e-4}) {
      for (std::size_t m : {1, 16, 256}) {
        const MHKernel k = kernel(ProposalKind::pcn, delta, m);
        RngStream rng(kSeed, StreamKey{stream_tag("coupling"), m, static_cast<std::uint64_t>(1.0 / delta)});
        CoupledPair pair{k.measure().sample(rng), k.measure().sample(rng)};
        const double d0 = (pair.x - pair.y).norm();
        double worst = 0.0;
        for (int n = 1; n <= 1000; ++n) {
          pair = coupled_step(k, pair, rng).pair;
          const double expected = std::pow(1.0 - 2.0 * delta, n / 2.0) * d0;
          worst = std::max(worst, std::abs((pair.x - pair.y).norm() - expected) / expected);
        }
        o.require(worst < 1e-10, "delta=" + fmt(delta) + " m=" + std::to_string(m) + " max rel err " + fmt(worst));
      }
    }
  });

  criterion(3, "pCN gap uniform in m", [](Outcome& o) {
    std::vector<GapReport> gaps;
    for (const auto& run : pcn_runs) {
      if (run.m == 1) continue;
      const GapReport g = gap_from_acf_linear(run.x1, run.m);
      o.require(std::abs(g.value - 0.2) <= 0.1 * 0.2,
                "m=" + std::to_string(run.m) + " gap " + fmt(g.value) + " se " + fmt(g.std_error));
      o.require(run.seconds < 300.0, "chain time " + fmt(run.seconds) + "s");
      gaps.push_back(g);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i)
      for (std::size_t j = i + 1; j < gaps.size(); ++j)
        worst = std::max(worst, std::abs(gaps[i].value - gaps[j].value) /
                                    std::hypot(gaps[i].std_error, gaps[j].std_error));
    o.require(worst <= 3.0, "largest pairwise difference " + fmt(worst) + " pooled se");
  });

  criterion(4, "pCN IACT matches the AR(1) value 9", [](Outcome& o) {
    for (const auto& run : pcn_runs) {
      const IactEstimate e = iact_and_variance(run.x1);
      o.require(std::abs(e.iact_acf - 9.0) <= 0.15 * 9.0,
                "m=" + std::to_string(run.m) + " iact " + fmt(e.iact_acf) + " (batch " + fmt(e.iact_batch) + ")");
    }
    pcn_runs.clear();
  });

  criterion(5, "RWM acceptance collapses with m", [](Outcome& o) {
    const auto start = std::chrono::steady_clock::now();
    const double delta = 0.1;
    const double r = 3.0;
    const RwmBoundParams params = RwmBoundParams::defaults(0.0, r);
    ConductanceOptions opt;
    opt.samples = 100000;
    opt.threads = kThreads;
    const RngStream root(kSeed, StreamKey{stream_tag("rwm"), 0, 0});
    double previous_accept = 2.0;
    bool strictly = true, respects = true;
    std::vector<double> bounds, dims;
    std::ostringstream values;
    for (std::size_t m = 1; m <= 256; m *= 2) {
      const MHKernel k = kernel(ProposalKind::rwm, delta, m);
      RngStream rng = root.replica(m);
      const ConductanceResult c =
          conductance_bounds(k, reference_sampler(k.measure()), {params.sigma, std::sqrt(r)}, opt, rng);
      const double bound = rwm_acceptance_bound(m, delta, params);
      strictly = strictly && c.mean_acceptance.value < previous_accept;
      previous_accept = c.mean_acceptance.value;
      respects = respects && c.mean_acceptance.value <= bound + 3.0 * c.mean_acceptance.std_error &&
                 c.mean_acceptance_in_set.value <= bound + 3.0 * c.mean_acceptance_in_set.std_error;
      values << m << ":" << fmt(c.mean_acceptance.value) << "/" << fmt(bound) << " ";
      bounds.push_back(bound);
      dims.push_back(static_cast<double>(m));
    }
    o.require(strictly, "mean acceptance strictly decreasing");
    o.require(respects, "acceptance <= bound + 3se [accept/bound " + values.str() + "]");
    for (int p : {1, 2, 4}) {
      std::size_t last_increase = 0;
      for (std::size_t i = 1; i < bounds.size(); ++i)
        if (std::pow(dims[i], p) * bounds[i] >= std::pow(dims[i - 1], p) * bounds[i - 1]) last_increase = i;
      o.require(last_increase == 0, "m^" + std::to_string(p) + " bound(m) decreasing" +
                                        (last_increase ? " (rises up to m=" +
                                                             std::to_string(static_cast<std::size_t>(
                                                                 dims[last_increase])) + ")"
                                                       : std::string()));
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(seconds < 300.0, "wall time " + fmt(seconds) + "s");
  });

  criterion(6, "RWM half-space bound decays like m^{-a/2}", [](Outcome& o) {
    const RngStream root(kSeed, StreamKey{stream_tag("half_space"), 0, 0});
    for (double a : {1.0, 2.0}) {
      std::vector<double> log_m, log_g;
      for (std::size_t m = 16; m <= 1024; m *= 2) {
        const MHKernel k = kernel(ProposalKind::rwm, std::pow(static_cast<double>(m), -a), m);
        RngStream rng = root.replica(static_cast<std::uint64_t>(a)).chain(m);
        const GapReport g = half_space_bound(k, reference_sampler(k.measure()), 200000, rng, kThreads);
        log_m.push_back(std::log(static_cast<double>(m)));
        log_g.push_back(std::log(g.raw_value));
      }
      const LinearFit fit = fit_line(log_m, log_g);
      o.require(std::abs(fit.slope + a / 2.0) <= 0.1, "a=" + fmt(a) + " slope " + fmt(fit.slope));
    }
    const MHKernel k(ProposalKind::rwm, 0.5, zero_target(), GaussianMeasure(Spectrum::explicit_values({1.0})));
    RngStream rng = root.child(stream_tag("orthant"));
    const GapReport g = half_space_bound(k, reference_sampler(k.measure()), 400000, rng, kThreads);
    o.require(std::abs(g.raw_value - 0.5) <= 3.0 * g.std_error,
              "orthant " + fmt(g.raw_value) + " se " + fmt(g.std_error));
  });

  criterion(7, "Lyapunov drift of ||x||^2 under pCN", [](Outcome& o) {
    const double delta = 0.18;
    const std::vector<double> radii{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    for (std::size_t m : {8, 64}) {
      const MHKernel k = kernel(ProposalKind::pcn, delta, m);
      DistanceParams p;
      RngStream rng(kSeed, StreamKey{stream_tag("lyapunov"), m, 0});
      const LyapunovEstimate est = estimate_lyapunov(k, p, radii, 20000, rng, kThreads);
      const double trace = k.measure().spectrum().trace();
      double worst = 0.0;
      for (const auto& row : est.table) {
        const double exact = (1.0 - 2.0 * delta) * row.v_x + 2.0 * delta * trace;
        worst = std::max(worst, std::abs(row.expected_next.value - exact) / row.expected_next.std_error);
      }
      o.require(worst <= 3.0, "m=" + std::to_string(m) + " max |E V - exact| " + fmt(worst) + " se");
      o.require(est.l_hat <= 1.0 - 2.0 * delta + 0.02, "m=" + std::to_string(m) + " l_hat " + fmt(est.l_hat));
    }
  });

  criterion(8, "weak Harris certificate for a Lipschitz tilt", [](Outcome& o) {
    const ExperimentConfig config = load_config(config_path("harris_verify.toml"));
    o.require(config.m_list == std::vector<std::size_t>{16} && config.step.at(16) == 0.18 &&
                  config.target.at("target") == "norm_tilt" && config.target.at("L") == 0.05,
              "config is norm_tilt L=0.05, m=16, delta=0.18");
    const ExperimentResult r = run_experiment(config, kThreads);
    const auto& cert = r.extras.at("certificates").at(0);
    const auto upper = [&](const char* part) { return cert.at(part).at("ci").at(1).get<double>(); };
    o.require(upper("lyapunov") < 1.0,
              "l_hat " + fmt(cert.at("lyapunov").at("l")) + " upper " + fmt(upper("lyapunov")));
    o.require(upper("contraction") < 1.0,
              "c_hat " + fmt(cert.at("contraction").at("c")) + " upper " + fmt(upper("contraction")));
    o.require(upper("smallness") < 1.0,
              "s_hat " + fmt(cert.at("smallness").at("s")) + " upper " + fmt(upper("smallness")));
    o.require(cert.at("premises_hold").get<bool>(), "premises_hold");
  });

  std::vector<std::vector<double>> checkpoints;
  const std::vector<std::size_t> grid{100, 1000, 10000};
  {
    const std::size_t replicas = 1000;
    checkpoints.assign(replicas, {});
    const MHKernel k = kernel(ProposalKind::pcn, 0.18, 8);
    const RngStream root(kSeed, StreamKey{stream_tag("replicas"), 0, 0});
    parallel_for(replicas, kThreads, [&](std::size_t i) {
      RngStream rng = root.replica(i);
      ErgodicAverage avg;
      auto& out = checkpoints[i];
      simulate(k, k.measure().sample(rng), grid.back(), rng, [&](std::size_t step, const StateVector& x, bool) {
        avg.push(x[0]);
        if (std::find(grid.begin(), grid.end(), step + 1) != grid.end()) out.push_back(avg.value());
      });
    });
  }

  criterion(9, "Kipnis-Varadhan CLT for x_1", [&](Outcome& o) {
    std::vector<double> finals;
    for (const auto& c : checkpoints) finals.push_back(c.back());
    const CltResult clt = clt_test(finals, grid.back(), 0.0);
    o.require(clt.passes, "KS " + fmt(clt.ks_statistic) + " < " + fmt(clt.critical_value));
    o.require(std::abs(clt.sigma2_hat - 9.0) <= 0.15 * 9.0, "sigma2_hat " + fmt(clt.sigma2_hat));
  });

  criterion(10, "MSE bound and burn-in", [&](Outcome& o) {
    const double beta = 0.8;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      std::vector<double> averages;
      for (const auto& c : checkpoints) averages.push_back(c[j]);
      const Estimate mse = empirical_mse(averages, 0.0);
      const double bound = mse_bound(static_cast<double>(grid[j]), beta);
      o.require(mse.value <= bound, "n=" + std::to_string(grid[j]) + " mse " + fmt(mse.value) + " <= " + fmt(bound));
    }
    const std::size_t n0 = burn_in(4.0, std::exp(-1.0), 1.0);
    o.require(n0 == 5, "burn_in(4, e^-1, 1) = " + std::to_string(n0));
  });
  checkpoints.clear();

  criterion(11, "Fernique moment", [](Outcome& o) {
    const double beta = 0.1;
    const GaussianMeasure measure(Spectrum::power_law(1.0, 8));
    const double exact = fernique_moment(measure, beta);
    const std::size_t n = 1000000;
    const std::size_t blocks = 64;
    std::vector<RunningStats> partial(blocks);
    const RngStream root(kSeed, StreamKey{stream_tag("fernique"), 0, 0});
    parallel_for(blocks, kThreads, [&](std::size_t b) {
      RngStream rng = root.replica(b);
      for (std::size_t i = 0; i < n / blocks; ++i) partial[b].push(std::exp(beta * measure.sample(rng).squaredNorm()));
    });
    RunningStats total;
    for (const auto& p : partial) total.merge(p);
    o.require(std::abs(total.mean() - exact) <= 0.01 * exact,
              "m=8 closed form " + fmt(exact) + " MC " + fmt(total.mean()) + " se " + fmt(total.std_error()));
    const double small = fernique_moment(GaussianMeasure(Spectrum::explicit_values({1.0, 0.5})), beta);
    o.require(std::abs(small - 1.14708) <= 5e-5, "Explicit([1,0.5]) " + fmt(small));
  });

  criterion(12, "ball probabilities nonincreasing in m per sample", [](Outcome& o) {
    for (double radius : {0.5, 1.0, 2.0}) {
      RngStream rng(kSeed, StreamKey{stream_tag("balls"), static_cast<std::uint64_t>(radius * 2), 0});
      const NestedBallProbabilities p =
          nested_ball_probabilities(Spectrum::power_law(1.0, 32), radius, {2, 8, 32}, 100000, rng);
      std::string values;
      for (const auto& e : p.estimates) values += fmt(e.value) + " ";
      o.require(p.monotone_per_sample, "R=" + fmt(radius) + " estimates " + values);
    }
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
