#include "spikesim.h"

#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikesim/analytic.hpp"
#include "spikesim/limits.hpp"
#include "spikesim/model.hpp"
#include "spikesim/quadrature.hpp"
#include "spikesim/simulate.hpp"
#include "spikesim/stats.hpp"

namespace {

thread_local std::string t_last_error;

spk_status fail(spk_status code, const char* msg) {
  t_last_error = msg;
  return code;
}

// Maps C++ failures onto status codes; success clears nothing so a stale
// message never shadows a new one.
template <typename F>
spk_status guarded(F&& body) {
  try {
    body();
    return SPK_OK;
  } catch (const spikesim::StepBudgetError& e) {
    return fail(SPK_ERR_BUDGET, e.what());
  } catch (const spikesim::QuadratureError& e) {
    return fail(SPK_ERR_NUMERIC, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SPK_ERR_INVALID, e.what());
  } catch (const std::domain_error& e) {
    return fail(SPK_ERR_INVALID, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SPK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SPK_ERR_INTERNAL, e.what());
  }
}

spk_status require(bool ok, const char* msg) {
  return ok ? SPK_OK : fail(SPK_ERR_INVALID, msg);
}

std::optional<spikesim::TaylorBounds> to_taylor(const spk_taylor_bounds* t) {
  if (t == nullptr) return std::nullopt;
  return spikesim::TaylorBounds{t->a, t->b, t->sigma_prime, t->M, t->delta0};
}

}  // namespace

// Handles carry the core object plus, where the operation needs a whole
// epsilon-indexed family rather than one member, a factory rebuilt from the
// construction parameters (null for Custom).
struct spk_model {
  spikesim::DiffusionModel m;
  std::function<spikesim::DiffusionModel(double)> at_eps;
};

struct spk_boundaries {
  spikesim::CycleBoundaries b;
};

struct spk_engine {
  std::unique_ptr<spikesim::CycleEngine> e;
};

struct spk_spike_train {
  spikesim::SpikeTrain t;
};

extern "C" {

const char* spk_last_error(void) { return t_last_error.c_str(); }

const char* spk_version(void) { return "1.0.0"; }

/* ---------------- models ---------------- */

spk_status spk_model_bb_linear(double b, double lambda, double epsilon,
                               spk_model** out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] {
    auto h = std::make_unique<spk_model>();
    h->m = spikesim::make_bb_linear(b, lambda, epsilon);
    h->at_eps = [b](double e) { return spikesim::make_bb_linear(b, 1.0, e); };
    *out = h.release();
  });
}

spk_status spk_model_rabi_linearized(double b, double lambda, double epsilon,
                                     spk_model** out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] {
    auto h = std::make_unique<spk_model>();
    h->m = spikesim::make_rabi_linearized(b, lambda, epsilon);
    h->at_eps = [b](double e) {
      return spikesim::make_rabi_linearized(b, 1.0, e);
    };
    *out = h.release();
  });
}

spk_status spk_model_asym_linear(const char* variant, double a, double b,
                                 double sigma_prime, double lambda,
                                 double epsilon, spk_model** out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  const std::string v = variant == nullptr ? "linear" : variant;
  if (v != "linear" && v != "perturbed") {
    return fail(SPK_ERR_INVALID,
                "unknown asym-linear variant (expected \"linear\" or "
                "\"perturbed\")");
  }
  return guarded([&] {
    auto h = std::make_unique<spk_model>();
    if (v == "linear") {
      h->m = spikesim::make_asym_linear_linear(a, b, sigma_prime, lambda,
                                               epsilon);
      h->at_eps = [a, b, sigma_prime](double e) {
        return spikesim::make_asym_linear_linear(a, b, sigma_prime, 1.0, e);
      };
    } else {
      h->m = spikesim::make_asym_linear_perturbed(a, b, sigma_prime, lambda,
                                                  epsilon);
      h->at_eps = [a, b, sigma_prime](double e) {
        return spikesim::make_asym_linear_perturbed(a, b, sigma_prime, 1.0, e);
      };
    }
    *out = h.release();
  });
}

spk_status spk_model_custom(spk_coeff_fn b1, spk_coeff_fn b2,
                            spk_coeff_fn sigma, spk_coeff_fn sigma_prime,
                            const spk_taylor_bounds* taylor, double lambda,
                            double epsilon, void* ctx, spk_model** out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  if (auto s = require(b1 != nullptr && b2 != nullptr && sigma != nullptr,
                       "b1, b2 and sigma callbacks are required")) {
    return s;
  }
  return guarded([&] {
    auto wrap = [ctx](spk_coeff_fn f) -> std::function<double(double)> {
      if (f == nullptr) return {};
      return [f, ctx](double x) { return f(x, ctx); };
    };
    auto h = std::make_unique<spk_model>();
    h->m = spikesim::make_custom(wrap(b1), wrap(b2), wrap(sigma),
                                 wrap(sigma_prime), to_taylor(taylor), lambda,
                                 epsilon);
    *out = h.release();
  });
}

void spk_model_free(spk_model* m) { delete m; }

spk_status spk_model_drift(const spk_model* m, double x, double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] { *out = spikesim::drift(m->m, x); });
}

spk_status spk_model_diffusion(const spk_model* m, double x, double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] { *out = spikesim::diffusion_coeff(m->m, x); });
}

spk_status spk_model_validate(const spk_model* m,
                              const spk_taylor_bounds* bounds,
                              const double* grid, size_t n,
                              spk_validation_row* rows_out,
                              int32_t* constraint_ok, int32_t* all_pass) {
  if (auto s = require(m != nullptr && bounds != nullptr && grid != nullptr &&
                           rows_out != nullptr && constraint_ok != nullptr &&
                           all_pass != nullptr && n > 0,
                       "null argument or empty grid")) {
    return s;
  }
  return guarded([&] {
    const auto report = spikesim::validate_model(
        m->m, *to_taylor(bounds), std::vector<double>(grid, grid + n));
    for (size_t i = 0; i < report.rows.size(); ++i) {
      const auto& r = report.rows[i];
      rows_out[i] = {r.x,      r.b1_err, r.b1_bound, r.b2_err, r.b2_bound,
                     r.s2_err, r.s2_bound, r.pass ? 1 : 0};
    }
    *constraint_ok = report.constraint_ok ? 1 : 0;
    *all_pass = report.all_pass ? 1 : 0;
  });
}

spk_status spk_boundaries_linear(double alpha_mult, double beta_mult,
                                 spk_boundaries** out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] {
    *out = new spk_boundaries{
        spikesim::make_linear_boundaries(alpha_mult, beta_mult)};
  });
}

spk_status spk_boundaries_rabi(double b, spk_boundaries** out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded(
      [&] { *out = new spk_boundaries{spikesim::make_rabi_boundaries(b)}; });
}

void spk_boundaries_free(spk_boundaries* b) { delete b; }

spk_status spk_boundaries_eval(const spk_boundaries* b, double epsilon,
                               double* alpha, double* beta) {
  if (auto s = require(b != nullptr && alpha != nullptr && beta != nullptr,
                       "null argument")) {
    return s;
  }
  return guarded([&] {
    *alpha = b->b.alpha(epsilon);
    *beta = b->b.beta(epsilon);
  });
}

/* ---------------- analytic ---------------- */

spk_status spk_hitting_prob(const spk_model* m, double x, double r, double R,
                            double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] { *out = spikesim::hitting_prob(m->m, x, r, R); });
}

spk_status spk_spike_prob(const spk_model* m, const spk_boundaries* bounds,
                          double z, double* out) {
  if (auto s = require(m != nullptr && bounds != nullptr && out != nullptr,
                       "null argument")) {
    return s;
  }
  return guarded([&] { *out = spikesim::spike_prob(m->m, bounds->b, z); });
}

spk_status spk_spike_prob_log(const spk_model* m, const spk_boundaries* bounds,
                              double z, double* out) {
  if (auto s = require(m != nullptr && bounds != nullptr && out != nullptr,
                       "null argument")) {
    return s;
  }
  return guarded([&] { *out = spikesim::spike_prob_log(m->m, bounds->b, z); });
}

namespace {

spk_status kernel_kind_of(int32_t k, spikesim::KernelKind* out) {
  switch (k) {
    case SPK_KERNEL_TWO_ABSORBING:
      *out = spikesim::KernelKind::TwoAbsorbing;
      return SPK_OK;
    case SPK_KERNEL_UPPER_ABSORBING:
      *out = spikesim::KernelKind::UpperAbsorbing;
      return SPK_OK;
    case SPK_KERNEL_LOWER_ABSORBING:
      *out = spikesim::KernelKind::LowerAbsorbing;
      return SPK_OK;
    default:
      return fail(SPK_ERR_INVALID, "unknown kernel kind");
  }
}

}  // namespace

spk_status spk_expected_exit_time(const spk_model* m, double start,
                                  double lower, double upper,
                                  int32_t kernel_kind, double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  spikesim::KernelKind kind;
  if (auto s = kernel_kind_of(kernel_kind, &kind)) return s;
  return guarded([&] {
    *out = spikesim::expected_exit_time(m->m, start, {lower, upper}, kind);
  });
}

spk_status spk_exit_time_second_moment(const spk_model* m, double start,
                                       double lower, double upper,
                                       int32_t kernel_kind, double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  spikesim::KernelKind kind;
  if (auto s = kernel_kind_of(kernel_kind, &kind)) return s;
  return guarded([&] {
    *out =
        spikesim::exit_time_second_moment(m->m, start, {lower, upper}, kind);
  });
}

spk_status spk_conditioned_downcross_mean(const spk_model* m, double lower,
                                          double z, double start,
                                          double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] {
    *out = spikesim::conditioned_downcross_mean(m->m, lower, z, start);
  });
}

spk_status spk_conditioned_downcross_second_moment(const spk_model* m,
                                                   double lower, double z,
                                                   double start, double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] {
    *out =
        spikesim::conditioned_downcross_second_moment(m->m, lower, z, start);
  });
}

/* ---------------- limits ---------------- */

spk_status spk_kappa_numeric(const spk_model* family_proto,
                             const spk_boundaries* bounds, double z,
                             const double* eps_grid, size_t n,
                             spk_kappa_row* rows_out, double* kappa_limit,
                             double* error_estimate,
                             int32_t* extrapolation_ok) {
  if (auto s = require(family_proto != nullptr && bounds != nullptr &&
                           eps_grid != nullptr && rows_out != nullptr &&
                           kappa_limit != nullptr &&
                           error_estimate != nullptr &&
                           extrapolation_ok != nullptr && n > 0,
                       "null argument or empty grid")) {
    return s;
  }
  if (!family_proto->at_eps) {
    return fail(SPK_ERR_INVALID,
                "custom models have no epsilon-indexed family");
  }
  return guarded([&] {
    const auto res = spikesim::kappa_numeric(
        family_proto->at_eps, bounds->b, z,
        std::vector<double>(eps_grid, eps_grid + n));
    for (size_t i = 0; i < res.rows.size(); ++i) {
      const auto& r = res.rows[i];
      rows_out[i] = {r.eps, r.e_up, r.e_down, r.kappa, r.cycle_m2};
    }
    *kappa_limit = res.kappa_limit;
    *error_estimate = res.error_estimate;
    *extrapolation_ok = res.extrapolation_ok ? 1 : 0;
  });
}

spk_status spk_kappa_limit_asym_linear(double a, double b, double sigma_prime,
                                       double alpha_mult, double beta_mult,
                                       double* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] {
    *out = spikesim::kappa_limit_asym_linear(a, b, sigma_prime, alpha_mult,
                                             beta_mult);
  });
}

spk_status spk_kappa_limit_rabi(double b, double* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] { *out = spikesim::kappa_limit_rabi(b); });
}

spk_status spk_alpha_xz(const spk_model* m, double x, double z, double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] { *out = spikesim::alpha_xz(m->m, x, z); });
}

spk_status spk_q_of_z(const spk_model* m, double z, double* out) {
  if (auto s = require(m != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] { *out = spikesim::q_of_z(m->m, z); });
}

spk_status spk_scaling_lambda(const spk_model* family_proto,
                              const spk_boundaries* bounds, double z_cal,
                              double J, double eps, double* out) {
  if (auto s = require(family_proto != nullptr && bounds != nullptr &&
                           out != nullptr,
                       "null argument")) {
    return s;
  }
  if (!family_proto->at_eps) {
    return fail(SPK_ERR_INVALID,
                "custom models have no epsilon-indexed family");
  }
  return guarded([&] {
    *out = spikesim::scaling_lambda(family_proto->at_eps, bounds->b, z_cal, J,
                                    eps);
  });
}

spk_status spk_mixture_law(double kappa, double J, double alpha,
                           const double* q_z, spk_mixture* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] {
    const auto law = spikesim::mixture_law(
        kappa, J, alpha,
        q_z == nullptr ? std::nullopt : std::optional<double>(*q_z));
    *out = {law.kappa, law.J, law.alpha_xz, law.atom_weight, law.rate};
  });
}

double spk_mixture_cdf(const spk_mixture* law, double t) {
  if (law == nullptr) return std::nan("");
  if (t < 0.0) return 0.0;
  return law->atom_weight + law->alpha_xz * (-std::expm1(-law->rate * t));
}

double spk_mixture_survival(const spk_mixture* law, double t) {
  if (law == nullptr) return std::nan("");
  if (t <= 0.0) return 1.0;
  return law->alpha_xz * std::exp(-law->rate * t);
}

spk_status spk_tv_bound(double p, double mean_abs_dev, double* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] { *out = spikesim::tv_bound(p, mean_abs_dev); });
}

spk_status spk_rabi_spike_prob_asymptotic(double b, double eps, double l,
                                          double z, double* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded(
      [&] { *out = spikesim::rabi_spike_prob_asymptotic(b, eps, l, z); });
}

spk_status spk_rabi_spike_prob_asymptotic_log(double b, double eps, double l,
                                              double z, double* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded(
      [&] { *out = spikesim::rabi_spike_prob_asymptotic_log(b, eps, l, z); });
}

spk_status spk_z_eps(double b, double eps, double* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] { *out = spikesim::z_eps(b, eps); });
}

spk_status spk_z_eps_log(double b, double eps, double* out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] { *out = spikesim::z_eps_log(b, eps); });
}

/* ---------------- simulation ---------------- */

void spk_sim_config_default(spk_sim_config* out) {
  if (out == nullptr) return;
  const spikesim::SimConfig d;
  out->scheme = d.scheme == spikesim::Scheme::EulerTransformed
                    ? SPK_SCHEME_EULER_TRANSFORMED
                    : SPK_SCHEME_EULER_NATIVE;
  out->dt_max = d.dt_max;
  out->c_drift = d.c_drift;
  out->c_bar = d.c_bar;
  out->barrier_refine = d.barrier_refine ? 1 : 0;
  out->rng_master_seed = d.rng_master_seed;
  out->step_budget = d.step_budget;
}

namespace {

spk_status to_sim_config(const spk_sim_config* in, spikesim::SimConfig* out) {
  switch (in->scheme) {
    case SPK_SCHEME_EULER_TRANSFORMED:
      out->scheme = spikesim::Scheme::EulerTransformed;
      break;
    case SPK_SCHEME_EULER_NATIVE:
      out->scheme = spikesim::Scheme::EulerNative;
      break;
    default:
      return fail(SPK_ERR_INVALID, "unknown scheme");
  }
  out->dt_max = in->dt_max;
  out->c_drift = in->c_drift;
  out->c_bar = in->c_bar;
  out->barrier_refine = in->barrier_refine != 0;
  out->rng_master_seed = in->rng_master_seed;
  out->step_budget = in->step_budget;
  return SPK_OK;
}

}  // namespace

spk_status spk_engine_new(const spk_model* m, const spk_boundaries* bounds,
                          double z, const spk_sim_config* cfg,
                          spk_engine** out) {
  if (auto s = require(m != nullptr && bounds != nullptr && cfg != nullptr &&
                           out != nullptr,
                       "null argument")) {
    return s;
  }
  spikesim::SimConfig c;
  if (auto s = to_sim_config(cfg, &c)) return s;
  return guarded([&] {
    auto h = std::make_unique<spk_engine>();
    h->e = std::make_unique<spikesim::CycleEngine>(m->m, bounds->b, z, c);
    *out = h.release();
  });
}

void spk_engine_free(spk_engine* e) { delete e; }

spk_status spk_engine_levels(const spk_engine* e, double* alpha, double* beta,
                             double* z) {
  if (auto s = require(e != nullptr, "engine is null")) return s;
  if (alpha != nullptr) *alpha = e->e->alpha();
  if (beta != nullptr) *beta = e->e->beta();
  if (z != nullptr) *z = e->e->z();
  return SPK_OK;
}

spk_status spk_engine_until_hit(const spk_engine* e, double x0, double low,
                                double high, uint64_t seed,
                                spk_hit_result* out) {
  if (auto s = require(e != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] {
    const auto r = e->e->until_hit(x0, low, high, seed);
    out->which =
        r.which == spikesim::HitSide::High ? SPK_HIT_HIGH : SPK_HIT_LOW;
    out->time = r.time;
    out->max_level = r.max_level;
  });
}

spk_status spk_engine_cycle(const spk_engine* e, uint64_t seed,
                            int32_t conditioned, spk_cycle_record* out) {
  if (auto s = require(e != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] {
    const auto r = e->e->cycle(seed, conditioned != 0);
    out->tau = r.tau;
    out->sigma = r.sigma;
    out->max_level = r.max_level;
    out->spike = r.spike ? 1 : 0;
    out->conditioned = r.conditioned ? 1 : 0;
  });
}

spk_status spk_engine_downcross_rejection(const spk_engine* e, uint64_t seed,
                                          double* out) {
  if (auto s = require(e != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] { *out = e->e->downcross_rejection(seed); });
}

spk_status spk_engine_spike_process(const spk_engine* e, double horizon,
                                    uint64_t seed, spk_spike_train** out) {
  if (auto s = require(e != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] {
    *out = new spk_spike_train{e->e->spike_process(horizon, seed)};
  });
}

spk_status spk_engine_hitting_time(const spk_engine* e, double x,
                                   uint64_t seed, double* out) {
  if (auto s = require(e != nullptr && out != nullptr, "null argument"))
    return s;
  return guarded([&] { *out = e->e->hitting_time_from(x, seed); });
}

size_t spk_spike_train_count(const spk_spike_train* t) {
  return t == nullptr ? 0 : t->t.times.size();
}

double spk_spike_train_time(const spk_spike_train* t, size_t i) {
  if (t == nullptr || i >= t->t.times.size()) return std::nan("");
  return t->t.times[i];
}

int64_t spk_spike_train_cycles(const spk_spike_train* t) {
  return t == nullptr ? 0 : t->t.n_cycles;
}

double spk_spike_train_horizon(const spk_spike_train* t) {
  return t == nullptr ? std::nan("") : t->t.horizon;
}

void spk_spike_train_free(spk_spike_train* t) { delete t; }

/* ---------------- statistics ---------------- */

spk_status spk_binomial_ci(int64_t successes, int64_t n, double level,
                           double* lo, double* hi) {
  if (auto s = require(lo != nullptr && hi != nullptr, "null argument"))
    return s;
  return guarded([&] {
    const auto iv = spikesim::binomial_ci(successes, n, level);
    *lo = iv.lo;
    *hi = iv.hi;
  });
}

spk_status spk_ks_exponential(const double* xs, size_t n, double rate,
                              double* stat, double* pvalue) {
  if (auto s = require(xs != nullptr && stat != nullptr && pvalue != nullptr,
                       "null argument")) {
    return s;
  }
  return guarded([&] {
    const auto r =
        spikesim::ks_exponential(std::vector<double>(xs, xs + n), rate);
    *stat = r.stat;
    *pvalue = r.pvalue;
  });
}

spk_status spk_ks_two_sample(const double* a, size_t na, const double* b,
                             size_t nb, double* stat, double* pvalue) {
  if (auto s = require(a != nullptr && b != nullptr && stat != nullptr &&
                           pvalue != nullptr,
                       "null argument")) {
    return s;
  }
  return guarded([&] {
    const auto r = spikesim::ks_two_sample(std::vector<double>(a, a + na),
                                           std::vector<double>(b, b + nb));
    *stat = r.stat;
    *pvalue = r.pvalue;
  });
}

spk_status spk_mixture_test(const double* samples, size_t n,
                            const spk_mixture* prediction,
                            const double* t0_grid, size_t n_t0,
                            int32_t self_calibrated,
                            spk_mixture_report* rows_out) {
  if (auto s = require(samples != nullptr && prediction != nullptr &&
                           t0_grid != nullptr && rows_out != nullptr &&
                           n_t0 > 0,
                       "null argument or empty t0 grid")) {
    return s;
  }
  return guarded([&] {
    // Rebuild the library-side law from the POD fields; cdf/survival close
    // over the same numbers the C accessors use.
    spikesim::LimitPrediction law;
    law.kappa = prediction->kappa;
    law.J = prediction->J;
    law.alpha_xz = prediction->alpha_xz;
    law.atom_weight = prediction->atom_weight;
    law.rate = prediction->rate;
    const double a = law.alpha_xz, w = law.atom_weight, rate = law.rate;
    law.cdf = [a, w, rate](double t) {
      return t < 0.0 ? 0.0 : w + a * (-std::expm1(-rate * t));
    };
    law.survival = [a, rate](double t) {
      return t <= 0.0 ? 1.0 : a * std::exp(-rate * t);
    };
    const auto reports = spikesim::mixture_test(
        std::vector<double>(samples, samples + n), law,
        std::vector<double>(t0_grid, t0_grid + n_t0), self_calibrated != 0);
    for (size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      rows_out[i] = {r.t0,
                     r.atom_fraction_hat,
                     r.atom_ci.lo,
                     r.atom_ci.hi,
                     r.ks_stat,
                     r.ks_pvalue,
                     r.rate_hat,
                     r.n,
                     r.n_tail,
                     r.degenerate ? 1 : 0};
    }
  });
}

spk_status spk_poisson_dispersion(const int64_t* counts, size_t n,
                                  double* index, double* pvalue) {
  if (auto s = require(counts != nullptr && index != nullptr &&
                           pvalue != nullptr,
                       "null argument")) {
    return s;
  }
  return guarded([&] {
    const auto r = spikesim::poisson_dispersion(
        std::vector<std::int64_t>(counts, counts + n));
    *index = r.index;
    *pvalue = r.pvalue;
  });
}

} /* extern "C" */
