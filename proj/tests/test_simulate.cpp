#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "spikesim/analytic.hpp"
#include "spikesim/limits.hpp"
#include "spikesim/model.hpp"
#include "spikesim/simulate.hpp"
#include "spikesim/stats.hpp"

using namespace spikesim;

namespace {

struct Moments {
  double mean;
  double se;
};

Moments moments(const std::vector<double>& xs) {
  double s = 0.0, s2 = 0.0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(xs.size());
  const double mean = s / n;
  const double var = std::max(0.0, s2 / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST_CASE("until_hit: boundary starts, validation, determinism") {
  const auto m = make_bb_linear(1.0, 1.0, 0.05);
  SimConfig cfg;
  const auto at_low = simulate_until_hit(m, 0.05, 0.05, 0.2, cfg, 1);
  CHECK(at_low.which == HitSide::Low);
  CHECK(at_low.time == 0.0);
  CHECK(at_low.max_level == 0.05);
  const auto at_high = simulate_until_hit(m, 0.2, 0.05, 0.2, cfg, 1);
  CHECK(at_high.which == HitSide::High);
  CHECK(at_high.time == 0.0);

  const auto a = simulate_until_hit(m, 0.1, 0.05, 0.2, cfg, 42);
  const auto b = simulate_until_hit(m, 0.1, 0.05, 0.2, cfg, 42);
  CHECK(a.which == b.which);
  CHECK(a.time == b.time);
  CHECK(a.max_level == b.max_level);
  const auto c = simulate_until_hit(m, 0.1, 0.05, 0.2, cfg, 43);
  CHECK(a.time != c.time);

  CHECK_THROWS_AS(simulate_until_hit(m, 0.3, 0.05, 0.2, cfg, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_until_hit(m, 0.1, 0.2, 0.05, cfg, 1),
                  std::invalid_argument);
  SimConfig bad = cfg;
  bad.dt_max = 0.0;
  CHECK_THROWS_AS(simulate_until_hit(m, 0.1, 0.05, 0.2, bad, 1),
                  std::invalid_argument);
}

TEST_CASE("until_hit: exit-side frequencies match the scale-function value") {
  const auto m = make_bb_linear(1.0, 1.0, 0.05);
  SimConfig cfg;
  cfg.rng_master_seed = 1001;
  const double p = hitting_prob(m, 0.1, 0.05, 0.2);
  const int n = 20000;
  int hi = 0;
  for (int i = 0; i < n; ++i) {
    if (simulate_until_hit(m, 0.1, 0.05, 0.2, cfg, i).which == HitSide::High) {
      ++hi;
    }
  }
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(double(hi) / n - p) < 3.0 * se);

  // The native scheme is an independent discretization of the same law.
  SimConfig native = cfg;
  native.scheme = Scheme::EulerNative;
  native.rng_master_seed = 1002;
  const int nn = 10000;
  int hi_native = 0;
  for (int i = 0; i < nn; ++i) {
    if (simulate_until_hit(m, 0.1, 0.05, 0.2, native, i).which ==
        HitSide::High) {
      ++hi_native;
    }
  }
  const double se_n = std::sqrt(p * (1.0 - p) / nn);
  CHECK(std::abs(double(hi_native) / nn - p) < 3.0 * se_n);

  // Quartic-noise preset exercises the y = -1/x coordinate branch.
  const auto rabi = make_rabi_linearized(1.0, 1.0, 0.1);
  const double pr = hitting_prob(rabi, 0.105, 0.1, 0.2);
  int hi_r = 0;
  const int nr = 5000;
  for (int i = 0; i < nr; ++i) {
    if (simulate_until_hit(rabi, 0.105, 0.1, 0.2, cfg, i).which ==
        HitSide::High) {
      ++hi_r;
    }
  }
  CHECK(std::abs(double(hi_r) / nr - pr) <
        3.0 * std::sqrt(pr * (1.0 - pr) / nr));
}

TEST_CASE("until_hit: zero-noise mode follows the deterministic flow") {
  // sigma identically zero turns the scheme into an ODE solver; with
  // negative drift everywhere the path must exit low, at the exact
  // constant-drift crossing time.
  const auto ode = make_custom([](double) { return 0.0; },
                               [](double) { return 1.0; },
                               [](double) { return 0.0; }, nullptr,
                               std::nullopt, 1.0, 0.0);
  SimConfig cfg;
  cfg.scheme = Scheme::EulerNative;
  const auto r = simulate_until_hit(ode, 1.0, 0.5, 2.0, cfg, 7);
  CHECK(r.which == HitSide::Low);
  CHECK(r.time == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.max_level == 1.0);

  // lambda only rescales the clock.
  const auto fast = make_custom([](double) { return 0.0; },
                                [](double) { return 1.0; },
                                [](double) { return 0.0; }, nullptr,
                                std::nullopt, 2.0, 0.0);
  const auto rf = simulate_until_hit(fast, 1.0, 0.5, 2.0, cfg, 7);
  CHECK(rf.time == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("until_hit: clock equivariance in lambda") {
  const auto slow = make_bb_linear(1.0, 1.0, 0.05);
  const auto fast = make_bb_linear(1.0, 3.0, 0.05);
  SimConfig cfg;
  cfg.rng_master_seed = 1003;
  std::vector<double> t1, t9;
  for (int i = 0; i < 4000; ++i) {
    t1.push_back(simulate_until_hit(slow, 0.1, 0.05, 0.2, cfg, i).time);
  }
  cfg.rng_master_seed = 1004;
  for (int i = 0; i < 4000; ++i) {
    t9.push_back(9.0 *
                 simulate_until_hit(fast, 0.1, 0.05, 0.2, cfg, i).time);
  }
  const auto a = moments(t1);
  const auto b = moments(t9);
  CHECK(std::abs(a.mean - b.mean) <
        3.0 * std::sqrt(a.se * a.se + b.se * b.se));
}

TEST_CASE("step budget aborts loudly with partial state") {
  const auto m = make_bb_linear(1.0, 1.0, 0.05);
  SimConfig cfg;
  cfg.step_budget = 500;
  try {
    // Mean exit takes ~10^3 steps, so 500 cannot be enough.
    for (int i = 0; i < 50; ++i) {
      simulate_until_hit(m, 0.1, 0.05, 0.2, cfg, i);
    }
    FAIL("budget was never exhausted");
  } catch (const StepBudgetError& e) {
    CHECK(e.steps == 500);
    CHECK(e.time > 0.0);
    CHECK(e.level > 0.0);
    CHECK(std::string(e.what()).find("step budget") != std::string::npos);
  }
}

TEST_CASE("cycles: means, spike frequency, record invariants") {
  const auto m = make_bb_linear(1.0, 1.0, 0.05);
  const auto bounds = make_linear_boundaries(1.0, 2.0);
  SimConfig cfg;
  cfg.rng_master_seed = 1005;
  CycleEngine eng(m, bounds, 1.0, cfg);
  CHECK(eng.alpha() == 0.05);
  CHECK(eng.beta() == 0.1);

  const int n = 20000;
  std::vector<double> taus, sigmas;
  int spikes = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = eng.cycle(i, false);
    CHECK(r.tau <= r.sigma);
    CHECK(!r.conditioned);
    CHECK(r.spike == (r.max_level >= 1.0));
    taus.push_back(r.tau);
    sigmas.push_back(r.sigma);
    if (r.spike) ++spikes;
  }
  // E[tau] = 5 exactly for this preset (b = 1, window (eps, 2 eps)).
  const auto mt = moments(taus);
  CHECK(std::abs(mt.mean - 5.0) < 3.0 * mt.se);
  // Full cycle mean: Green-kernel up-leg plus the return time from beta,
  // the latter computed on a truncated domain wide enough to be exact to
  // far below Monte Carlo resolution.
  const double e_up =
      expected_exit_time(m, 0.05, {0.0, 0.1}, KernelKind::UpperAbsorbing);
  const double e_ret =
      expected_exit_time(m, 0.1, {0.05, 50.0}, KernelKind::LowerAbsorbing);
  const auto ms = moments(sigmas);
  CHECK(std::abs(ms.mean - (e_up + e_ret)) < 3.0 * ms.se);
  // Spike frequency against the quadrature probability.
  const double p = spike_prob(m, bounds, 1.0);
  CHECK(std::abs(double(spikes) / n - p) <
        3.0 * std::sqrt(p * (1.0 - p) / n));

  // Same seed, fresh engine: bit-identical records.
  CycleEngine eng2(m, bounds, 1.0, cfg);
  const auto r1 = eng.cycle(123, false);
  const auto r2 = eng2.cycle(123, false);
  CHECK(r1.tau == r2.tau);
  CHECK(r1.sigma == r2.sigma);
  CHECK(r1.max_level == r2.max_level);

  // One-shot wrapper matches the engine.
  const auto r3 = sample_cycle(m, bounds, 1.0, cfg, 123, false);
  CHECK(r3.sigma == r1.sigma);

  CHECK_THROWS_AS(CycleEngine(m, bounds, 0.01, cfg), std::invalid_argument);
}

TEST_CASE("conditioned cycles: no z contact, Green-kernel mean, KS match") {
  const auto m = make_bb_linear(1.0, 1.0, 0.05);
  const auto bounds = make_linear_boundaries(1.0, 2.0);
  SimConfig cfg;
  cfg.rng_master_seed = 1006;
  CycleEngine eng(m, bounds, 1.0, cfg);

  const int n = 15000;
  std::vector<double> sigmas;
  for (int i = 0; i < n; ++i) {
    const auto r = eng.cycle(i, true);
    CHECK(r.conditioned);
    CHECK(!r.spike);
    CHECK(r.max_level < 1.0);
    sigmas.push_back(r.sigma);
  }
  const double e_dn = conditioned_downcross_mean(m, 0.05, 1.0, 0.1);
  const auto ms = moments(sigmas);
  CHECK(std::abs(ms.mean - (5.0 + e_dn)) < 3.0 * ms.se);

  // Rejection sampling draws from the same law; compare the down-phase
  // means against the analytic value and the two laws against each other.
  std::vector<double> rej, cond;
  for (int i = 0; i < 6000; ++i) {
    rej.push_back(eng.downcross_rejection(i));
    const auto r = eng.cycle(100000 + i, true);
    cond.push_back(r.sigma - r.tau);
  }
  const auto mr = moments(rej);
  const auto mc = moments(cond);
  CHECK(std::abs(mr.mean - e_dn) < 3.0 * mr.se);
  CHECK(std::abs(mc.mean - e_dn) < 3.0 * mc.se);
  CHECK(ks_two_sample(rej, cond).pvalue > 0.01);
}

TEST_CASE("spike trains: rate, dispersion, straddling convention") {
  const auto bounds = make_linear_boundaries(1.0, 2.0);
  const double eps = 0.05;
  const double j = 1.0;
  const double lam = scaling_lambda(
      [](double e) { return make_bb_linear(1.0, 1.0, e); }, bounds, 1.0, j,
      eps);
  const auto m = make_bb_linear(1.0, lam, eps);
  SimConfig cfg;
  cfg.rng_master_seed = 1007;
  CycleEngine eng(m, bounds, 1.0, cfg);

  const double horizon = 20.0;
  const int runs = 60;
  std::vector<std::int64_t> counts;
  double straddle_mean = 0.0;
  for (int i = 0; i < runs; ++i) {
    const auto train = eng.spike_process(horizon, i);
    CHECK(train.horizon == horizon);
    CHECK(train.n_cycles > 0);
    double prev = 0.0;
    for (double t : train.times) {
      CHECK(t > prev);
      CHECK(t <= horizon);
      prev = t;
    }
    counts.push_back(static_cast<std::int64_t>(train.times.size()));
    straddle_mean += static_cast<double>(train.times.size());
  }
  straddle_mean /= runs;

  // Mean count vs kappa J T at this eps (kappa_eps, not the limit).
  const auto kres = kappa_numeric(
      [](double e) { return make_bb_linear(1.0, 1.0, e); }, bounds, 1.0,
      {eps});
  const double expect = kres.rows[0].kappa * j * horizon;
  double var = 0.0;
  for (auto c : counts) {
    var += (static_cast<double>(c) - straddle_mean) *
           (static_cast<double>(c) - straddle_mean);
  }
  var /= (runs - 1);
  const double se = std::sqrt(var / runs);
  CHECK(std::abs(straddle_mean - expect) < 3.0 * se);
  const auto disp = poisson_dispersion(counts);
  CHECK(disp.index > 0.6);
  CHECK(disp.index < 1.4);

  // The alternative bracketing (count spikes of fully completed cycles)
  // agrees within Monte Carlo error: chain cycles by hand.
  double alt_mean = 0.0;
  const double u_limit = lam * lam * horizon;
  for (int i = 0; i < runs; ++i) {
    double u = 0.0;
    int cnt = 0;
    for (int c = 0; u < u_limit; ++c) {
      const auto r = eng.cycle(1000000 + i * 4096 + c, false);
      u += r.sigma * lam * lam;
      if (r.spike && u <= u_limit) ++cnt;
    }
    alt_mean += cnt;
  }
  alt_mean /= runs;
  CHECK(std::abs(alt_mean - straddle_mean) < 4.0 * se);

  // Below-beta target: every cycle spikes (up to the straddling one).
  const auto m1 = make_bb_linear(1.0, 1.0, eps);
  const auto low_train = run_spike_process(m1, bounds, 0.08, 30.0, cfg, 5);
  CHECK(low_train.n_cycles >= 4);
  CHECK(static_cast<std::int64_t>(low_train.times.size()) >=
        low_train.n_cycles - 1);

  CHECK_THROWS_AS(eng.spike_process(-1.0, 0), std::invalid_argument);
}

TEST_CASE("spike trains: lambda-rescaled run equals the lambda = 1 run") {
  const auto bounds = make_linear_boundaries(1.0, 2.0);
  const auto m1 = make_bb_linear(1.0, 1.0, 0.05);
  const auto m3 = make_bb_linear(1.0, 3.0, 0.05);
  SimConfig cfg;
  cfg.rng_master_seed = 1008;
  CycleEngine e1(m1, bounds, 0.4, cfg);
  cfg.rng_master_seed = 1009;
  CycleEngine e3(m3, bounds, 0.4, cfg);

  // Horizon T with lambda = 3 covers the same cycle count as horizon 9T
  // with lambda = 1; spike counts must agree in distribution.
  std::vector<double> c1, c3;
  for (int i = 0; i < 50; ++i) {
    c1.push_back(double(e1.spike_process(90.0, i).times.size()));
    c3.push_back(double(e3.spike_process(10.0, i).times.size()));
  }
  const auto a = moments(c1);
  const auto b = moments(c3);
  CHECK(std::abs(a.mean - b.mean) <
        3.0 * std::sqrt(a.se * a.se + b.se * b.se));
}

TEST_CASE("hitting-time sampler: start at z, analytic mean, atom fraction") {
  const auto bounds = make_linear_boundaries(1.0, 2.0);
  const double eps = 0.05;
  const double j = 1.0;
  const double lam = scaling_lambda(
      [](double e) { return make_bb_linear(1.0, 1.0, e); }, bounds, 1.0, j,
      eps);
  const auto m = make_bb_linear(1.0, lam, eps);
  SimConfig cfg;
  cfg.rng_master_seed = 1010;

  CHECK(sample_hitting_time_from_x(m, 1.0, 1.0, eps, cfg, 0) == 0.0);

  CycleEngine eng(m, bounds, 1.0, cfg);
  const int n = 400;
  std::vector<double> ts;
  for (int i = 0; i < n; ++i) {
    ts.push_back(eng.hitting_time_from(0.5, i));
  }
  // Exact finite-eps mean from the Green kernel on (0, z).
  const double e_hit =
      expected_exit_time(m, 0.5, {0.0, 1.0}, KernelKind::UpperAbsorbing);
  const auto mt = moments(ts);
  CHECK(std::abs(mt.mean - e_hit) < 3.0 * mt.se);

  // Mass near zero approaches 1 - alpha_{x,z} = 0.25; allow for the
  // finite-eps distortion on top of the binomial noise.
  const auto kres = kappa_numeric(
      [](double e) { return make_bb_linear(1.0, 1.0, e); }, bounds, 1.0,
      {eps});
  const double t0 = 0.05 / (kres.rows[0].kappa * j);
  int below = 0;
  for (double t : ts) {
    if (t < t0) ++below;
  }
  CHECK(std::abs(double(below) / n - 0.25) < 0.08);

  // A start below the floor is legal and strictly positive.
  const double deep = sample_hitting_time_from_x(m, 0.01, 1.0, eps, cfg, 3);
  CHECK(deep > 0.0);

  CHECK_THROWS_AS(sample_hitting_time_from_x(m, 0.0, 1.0, eps, cfg, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_hitting_time_from_x(m, 0.5, 1.0, 2.0, cfg, 0),
                  std::invalid_argument);
}

TEST_CASE("halving dt_max moves the spike estimate by less than one SE") {
  // The seed-coupled coarse/fine difference is itself a random variable
  // with mean ~0.4 SE, so this is pinned to a fixed master seed rather
  // than left to flake on the ~15% of seeds whose draw lands above 1.
  const auto m = make_bb_linear(1.0, 1.0, 0.05);
  SimConfig coarse;
  coarse.rng_master_seed = 0;
  SimConfig fine = coarse;
  fine.dt_max = 5e-4;
  const double p = spike_prob(m, make_linear_boundaries(1.0, 2.0), 1.0);
  const int n = 100000;
  int h_coarse = 0, h_fine = 0;
  for (int i = 0; i < n; ++i) {
    if (simulate_until_hit(m, 0.1, 0.05, 1.0, coarse, i).which ==
        HitSide::High) {
      ++h_coarse;
    }
    if (simulate_until_hit(m, 0.1, 0.05, 1.0, fine, i).which ==
        HitSide::High) {
      ++h_fine;
    }
  }
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(double(h_coarse) - h_fine) / n < se);
}
