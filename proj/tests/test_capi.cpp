#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "spikesim.h"

namespace {

double zero_fn(double, void*) { return 0.0; }
double one_fn(double, void*) { return 1.0; }

}  // namespace

TEST_CASE("c api: model lifecycle, coefficients, argument errors") {
  CHECK(spk_version() != nullptr);

  spk_model* m = nullptr;
  REQUIRE(spk_model_bb_linear(1.0, 2.0, 0.01, &m) == SPK_OK);
  double d = 0.0;
  CHECK(spk_model_drift(m, 1.0, &d) == SPK_OK);
  CHECK(d == doctest::Approx(-1.98).epsilon(1e-12));
  CHECK(spk_model_diffusion(m, 1.0, &d) == SPK_OK);
  CHECK(d == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(spk_model_drift(m, -1.0, &d) == SPK_ERR_INVALID);
  CHECK(std::strlen(spk_last_error()) > 0);
  spk_model_free(m);

  CHECK(spk_model_bb_linear(1.0, 1.0, 0.01, nullptr) == SPK_ERR_INVALID);
  spk_model* bad = nullptr;
  CHECK(spk_model_bb_linear(-1.0, 1.0, 0.01, &bad) == SPK_ERR_INVALID);
  CHECK(spk_model_asym_linear("cubic", 1, 1, 1, 1, 0.01, &bad) ==
        SPK_ERR_INVALID);
  spk_model_free(nullptr);
}

TEST_CASE("c api: boundaries") {
  spk_boundaries* lin = nullptr;
  REQUIRE(spk_boundaries_linear(1.0, 2.0, &lin) == SPK_OK);
  double a = 0.0, b = 0.0;
  CHECK(spk_boundaries_eval(lin, 0.05, &a, &b) == SPK_OK);
  CHECK(a == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(b == doctest::Approx(0.10).epsilon(1e-15));
  spk_boundaries_free(lin);

  spk_boundaries* rabi = nullptr;
  REQUIRE(spk_boundaries_rabi(2.0, &rabi) == SPK_OK);
  CHECK(spk_boundaries_eval(rabi, 0.1, &a, &b) == SPK_OK);
  CHECK(a == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(b == doctest::Approx(0.06).epsilon(1e-15));
  spk_boundaries_free(rabi);
}

TEST_CASE("c api: analytic quantities round-trip the library values") {
  spk_model* m = nullptr;
  REQUIRE(spk_model_bb_linear(1.0, 1.0, 0.0, &m) == SPK_OK);
  double p = 0.0;
  CHECK(spk_hitting_prob(m, 1.5, 1.0, 2.0, &p) == SPK_OK);
  CHECK(p == doctest::Approx(1.25 / 3.0).epsilon(1e-10));
  spk_model_free(m);

  spk_model* me = nullptr;
  REQUIRE(spk_model_bb_linear(1.0, 1.0, 0.05, &me) == SPK_OK);
  spk_boundaries* lin = nullptr;
  REQUIRE(spk_boundaries_linear(1.0, 2.0, &lin) == SPK_OK);
  double ps = 0.0, psl = 0.0;
  CHECK(spk_spike_prob(me, lin, 1.0, &ps) == SPK_OK);
  CHECK(spk_spike_prob_log(me, lin, 1.0, &psl) == SPK_OK);
  CHECK(std::log(ps) == doctest::Approx(psl).epsilon(1e-10));

  double e1 = 0.0, e4 = 0.0;
  CHECK(spk_expected_exit_time(me, 0.07, 0.05, 0.1,
                               SPK_KERNEL_TWO_ABSORBING, &e1) == SPK_OK);
  spk_model* fast = nullptr;
  REQUIRE(spk_model_bb_linear(1.0, 2.0, 0.05, &fast) == SPK_OK);
  CHECK(spk_expected_exit_time(fast, 0.07, 0.05, 0.1,
                               SPK_KERNEL_TWO_ABSORBING, &e4) == SPK_OK);
  CHECK(e1 == doctest::Approx(4.0 * e4).epsilon(1e-12));
  CHECK(spk_expected_exit_time(me, 0.07, 0.05, 0.1, 99, &e1) ==
        SPK_ERR_INVALID);

  double m2 = 0.0;
  CHECK(spk_exit_time_second_moment(me, 0.07, 0.05, 0.1,
                                    SPK_KERNEL_TWO_ABSORBING, &m2) == SPK_OK);
  CHECK(m2 >= e1 * e1);

  double dn = 0.0;
  CHECK(spk_conditioned_downcross_mean(me, 0.05, 1.0, 0.1, &dn) == SPK_OK);
  CHECK(dn == doctest::Approx(0.8346946683).epsilon(1e-8));
  double dn2 = 0.0;
  CHECK(spk_conditioned_downcross_second_moment(me, 0.05, 1.0, 0.1, &dn2) ==
        SPK_OK);
  CHECK(dn2 > dn * dn);

  spk_model_free(fast);
  spk_model_free(me);
  spk_boundaries_free(lin);
}

TEST_CASE("c api: limit constants and the scaling curve") {
  double k = 0.0;
  CHECK(spk_kappa_limit_asym_linear(1, 1, 1, 1, 2, &k) == SPK_OK);
  CHECK(k == doctest::Approx(0.1695874752).epsilon(1e-8));
  CHECK(spk_kappa_limit_rabi(1.0, &k) == SPK_OK);
  CHECK(k == doctest::Approx(0.1669273704).epsilon(1e-8));

  spk_model* m = nullptr;
  REQUIRE(spk_model_bb_linear(1.0, 1.0, 0.05, &m) == SPK_OK);
  double axz = 0.0;
  CHECK(spk_alpha_xz(m, 1.0, 2.0, &axz) == SPK_OK);
  CHECK(axz == doctest::Approx(0.75).epsilon(1e-8));
  double q = 0.0;
  CHECK(spk_q_of_z(m, 1.0, &q) == SPK_OK);
  CHECK(q == doctest::Approx(1.0).epsilon(1e-12));

  spk_boundaries* lin = nullptr;
  REQUIRE(spk_boundaries_linear(1.0, 2.0, &lin) == SPK_OK);
  spk_kappa_row rows[3];
  double klim = 0.0, err = 0.0;
  int32_t ok = 0;
  const double grid[3] = {0.1, 0.05, 0.02};
  CHECK(spk_kappa_numeric(m, lin, 1.0, grid, 3, rows, &klim, &err, &ok) ==
        SPK_OK);
  CHECK(rows[1].kappa == doctest::Approx(0.1713885742).epsilon(1e-7));
  CHECK(rows[2].kappa == doctest::Approx(0.1700112064).epsilon(1e-7));
  CHECK(ok == 1);
  CHECK(std::abs(klim / 0.1695874752 - 1.0) < 0.02);

  double lam = 0.0;
  CHECK(spk_scaling_lambda(m, lin, 1.0, 1.0, 0.05, &lam) == SPK_OK);
  double p = 0.0;
  CHECK(spk_spike_prob(m, lin, 1.0, &p) == SPK_OK);
  CHECK(lam * lam * p == doctest::Approx(1.0).epsilon(1e-9));

  // Custom models cannot be re-instantiated at another epsilon.
  spk_model* cm = nullptr;
  REQUIRE(spk_model_custom(one_fn, one_fn, one_fn, one_fn, nullptr, 1.0, 0.05,
                           nullptr, &cm) == SPK_OK);
  CHECK(spk_kappa_numeric(cm, lin, 1.0, grid, 3, rows, &klim, &err, &ok) ==
        SPK_ERR_INVALID);
  spk_model_free(cm);

  spk_mixture law;
  CHECK(spk_mixture_law(0.17, 1.0, 0.75, nullptr, &law) == SPK_OK);
  CHECK(law.atom_weight == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(law.rate == doctest::Approx(0.17).epsilon(1e-15));
  CHECK(spk_mixture_cdf(&law, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(spk_mixture_survival(&law, 0.0) == 1.0);
  const double qz = 2.0;
  CHECK(spk_mixture_law(0.17, 1.0, 0.75, &qz, &law) == SPK_OK);
  CHECK(law.rate == doctest::Approx(0.085).epsilon(1e-15));

  double tv = 0.0;
  CHECK(spk_tv_bound(0.01, 0.001, &tv) == SPK_OK);
  CHECK(tv == doctest::Approx(0.01 / (2.0 * std::sqrt(0.99)) + 0.001)
                  .epsilon(1e-12));

  double zl = 0.0;
  CHECK(spk_z_eps_log(1.0, 0.05, &zl) == SPK_OK);
  CHECK(zl == doctest::Approx(73.5766498915).epsilon(1e-9));
  double ra = 0.0;
  CHECK(spk_rabi_spike_prob_asymptotic_log(1.0, 0.05, 1.0, 1.0, &ra) ==
        SPK_OK);
  CHECK(ra == doctest::Approx(-70.9138379659).epsilon(1e-8));

  spk_model_free(m);
  spk_boundaries_free(lin);
}

TEST_CASE("c api: engine sampling, spike trains, budget failure") {
  spk_model* m = nullptr;
  REQUIRE(spk_model_bb_linear(1.0, 1.0, 0.05, &m) == SPK_OK);
  spk_boundaries* lin = nullptr;
  REQUIRE(spk_boundaries_linear(1.0, 2.0, &lin) == SPK_OK);
  spk_sim_config cfg;
  spk_sim_config_default(&cfg);
  CHECK(cfg.scheme == SPK_SCHEME_EULER_TRANSFORMED);
  CHECK(cfg.dt_max == doctest::Approx(1e-3));

  spk_engine* eng = nullptr;
  REQUIRE(spk_engine_new(m, lin, 1.0, &cfg, &eng) == SPK_OK);
  double a = 0.0, b = 0.0, z = 0.0;
  CHECK(spk_engine_levels(eng, &a, &b, &z) == SPK_OK);
  CHECK(a == doctest::Approx(0.05));
  CHECK(b == doctest::Approx(0.10));
  CHECK(z == doctest::Approx(1.0));

  spk_hit_result h1, h2;
  CHECK(spk_engine_until_hit(eng, 0.07, 0.05, 0.1, 9, &h1) == SPK_OK);
  CHECK(spk_engine_until_hit(eng, 0.07, 0.05, 0.1, 9, &h2) == SPK_OK);
  CHECK(h1.time == h2.time);
  CHECK(h1.which == h2.which);
  CHECK(h1.max_level >= 0.07);

  spk_cycle_record rec;
  CHECK(spk_engine_cycle(eng, 4, 0, &rec) == SPK_OK);
  CHECK(rec.tau <= rec.sigma);
  CHECK(rec.conditioned == 0);
  CHECK(spk_engine_cycle(eng, 4, 1, &rec) == SPK_OK);
  CHECK(rec.conditioned == 1);
  CHECK(rec.spike == 0);
  CHECK(rec.max_level < 1.0);

  double dc = 0.0;
  CHECK(spk_engine_downcross_rejection(eng, 11, &dc) == SPK_OK);
  CHECK(dc > 0.0);

  spk_spike_train* train = nullptr;
  REQUIRE(spk_engine_spike_process(eng, 50.0, 2, &train) == SPK_OK);
  CHECK(spk_spike_train_horizon(train) == 50.0);
  CHECK(spk_spike_train_cycles(train) > 0);
  const size_t cnt = spk_spike_train_count(train);
  for (size_t i = 0; i < cnt; ++i) {
    const double t = spk_spike_train_time(train, i);
    CHECK(t > 0.0);
    CHECK(t <= 50.0);
  }
  CHECK(std::isnan(spk_spike_train_time(train, cnt)));
  spk_spike_train_free(train);

  double ht = -1.0;
  CHECK(spk_engine_hitting_time(eng, 1.0, 0, &ht) == SPK_OK);
  CHECK(ht == 0.0);

  spk_sim_config tiny = cfg;
  tiny.step_budget = 100;
  spk_engine* starved = nullptr;
  REQUIRE(spk_engine_new(m, lin, 1.0, &tiny, &starved) == SPK_OK);
  CHECK(spk_engine_cycle(starved, 0, 0, &rec) == SPK_ERR_BUDGET);
  CHECK(std::string(spk_last_error()).find("step budget") !=
        std::string::npos);
  spk_engine_free(starved);

  spk_engine_free(eng);
  spk_boundaries_free(lin);
  spk_model_free(m);
}

TEST_CASE("c api: zero-noise custom model integrates the drift ODE") {
  // b1 is identically zero, so epsilon only parameterizes the window the
  // engine is constructed with, not the flow.
  spk_model* ode = nullptr;
  REQUIRE(spk_model_custom(zero_fn, one_fn, zero_fn, nullptr, nullptr, 1.0,
                           0.3, nullptr, &ode) == SPK_OK);
  spk_boundaries* lin = nullptr;
  REQUIRE(spk_boundaries_linear(1.0, 2.0, &lin) == SPK_OK);
  spk_sim_config cfg;
  spk_sim_config_default(&cfg);
  cfg.scheme = SPK_SCHEME_EULER_NATIVE;
  spk_engine* eng = nullptr;
  REQUIRE(spk_engine_new(ode, lin, 1.0, &cfg, &eng) == SPK_OK);
  spk_hit_result h;
  CHECK(spk_engine_until_hit(eng, 1.0, 0.5, 2.0, 0, &h) == SPK_OK);
  CHECK(h.which == SPK_HIT_LOW);
  CHECK(h.time == doctest::Approx(1.0).epsilon(1e-9));
  spk_engine_free(eng);
  spk_boundaries_free(lin);
  spk_model_free(ode);
}

TEST_CASE("c api: statistics wrappers") {
  double lo = 0.0, hi = 0.0;
  CHECK(spk_binomial_ci(50, 100, 0.95, &lo, &hi) == SPK_OK);
  CHECK(lo == doctest::Approx(0.4038315304).epsilon(1e-9));
  CHECK(hi == doctest::Approx(0.5961684696).epsilon(1e-9));
  CHECK(spk_binomial_ci(50, 0, 0.95, &lo, &hi) == SPK_ERR_INVALID);

  const std::vector<double> xs = {0.1, 0.5, 0.9, 1.7, 3.0};
  double stat = 0.0, pv = 0.0;
  CHECK(spk_ks_exponential(xs.data(), xs.size(), 1.0, &stat, &pv) == SPK_OK);
  CHECK(stat == doctest::Approx(0.2173164759).epsilon(1e-9));
  CHECK(pv > 0.5);

  CHECK(spk_ks_two_sample(xs.data(), xs.size(), xs.data(), xs.size(), &stat,
                          &pv) == SPK_OK);
  CHECK(stat == 0.0);

  // Deterministic quantile sample of the mixture: 25% atom, Exp(2) tail.
  std::vector<double> mix(100, 0.0);
  for (int i = 25; i < 100; ++i) {
    const double u = (i - 25 + 0.5) / 75.0;
    mix[i] = 1e-3 + -std::log1p(-u) / 2.0;
  }
  spk_mixture law;
  REQUIRE(spk_mixture_law(2.0, 1.0, 0.75, nullptr, &law) == SPK_OK);
  const double t0 = 5e-4;
  spk_mixture_report rep;
  CHECK(spk_mixture_test(mix.data(), mix.size(), &law, &t0, 1, 0, &rep) ==
        SPK_OK);
  CHECK(rep.atom_fraction_hat == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rep.n_tail == 75);
  CHECK(rep.degenerate == 0);
  CHECK(rep.ks_pvalue > 0.5);
  CHECK(rep.atom_lo < 0.25);
  CHECK(rep.atom_hi > 0.25);

  const std::vector<int64_t> counts = {4, 7, 5, 3, 6, 5, 8, 2, 5, 5};
  double idx = 0.0;
  CHECK(spk_poisson_dispersion(counts.data(), counts.size(), &idx, &pv) ==
        SPK_OK);
  CHECK(idx == doctest::Approx(0.6222222222).epsilon(1e-9));
  CHECK(pv == doctest::Approx(0.4416245677).epsilon(1e-8));
}
