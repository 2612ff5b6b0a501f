#ifndef SPIKESIM_H
#define SPIKESIM_H

/* C interface to the spikesim library.
 *
 * The library studies one-dimensional diffusions on (0, infinity)
 *
 *   dX_t = (lambda^2/2) (epsilon b1(X_t) - b2(X_t)) dt + lambda sigma(X_t) dB_t
 *
 * whose rare upward excursions ("spikes") become a Poisson process in the
 * joint limit epsilon -> 0, lambda -> infinity with lambda^2 p_{eps,z} held
 * constant. It computes the analytic side (hitting probabilities, cycle
 * moments, limit constants, the atom-plus-exponential hitting-time law) by
 * quadrature and provides a Monte Carlo engine to check those predictions.
 *
 * Conventions:
 *   - Every fallible call returns a spk_status and writes results through
 *     out-pointers. On failure the out-values are unspecified and
 *     spk_last_error() describes the problem (thread-local, valid until the
 *     next failing call on the same thread).
 *   - Handles (spk_model, spk_boundaries, spk_engine, spk_spike_train) are
 *     opaque, created by *_new/ *_make constructors and released with the
 *     matching *_free. Freeing NULL is a no-op. All handles are immutable
 *     after construction and safe to share across threads.
 *   - Simulation calls take an explicit path seed; identical (handle
 *     contents, seed) pairs reproduce identical results on every platform,
 *     which makes fan-out across workers order-independent.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SPK_API __declspec(dllexport)
#else
#define SPK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t spk_status;

enum {
  SPK_OK = 0,
  /* invalid argument, out-of-range value, or malformed input */
  SPK_ERR_INVALID = 1,
  /* quadrature failed to reach its tolerance or produced a non-finite value */
  SPK_ERR_NUMERIC = 2,
  /* the simulation step budget was exhausted before the event of interest */
  SPK_ERR_BUDGET = 3,
  /* unexpected internal failure */
  SPK_ERR_INTERNAL = 4
};

/* Message for the most recent failure on the calling thread; empty string if
 * no failure has occurred yet. */
SPK_API const char* spk_last_error(void);

SPK_API const char* spk_version(void);

/* ------------------------------------------------------------------ */
/* Models                                                              */
/* ------------------------------------------------------------------ */

typedef struct spk_model spk_model;
typedef struct spk_boundaries spk_boundaries;
typedef struct spk_engine spk_engine;
typedef struct spk_spike_train spk_spike_train;

/* Declared Taylor behavior of (b1, b2, sigma) at zero: b1(0) = a,
 * b2'(0) = b, sigma'(0) = sigma_prime, remainders bounded by M x, M x^2,
 * M x^3 on [0, delta0]. */
typedef struct {
  double a;
  double b;
  double sigma_prime;
  double M;
  double delta0;
} spk_taylor_bounds;

/* b1 = 1, b2 = b x, sigma = x. */
SPK_API spk_status spk_model_bb_linear(double b, double lambda,
                                       double epsilon, spk_model** out);

/* b1 = 1, b2 = b x, sigma = x^2 (quartic noise). */
SPK_API spk_status spk_model_rabi_linearized(double b, double lambda,
                                             double epsilon, spk_model** out);

/* Asymptotically linear family with b1 -> a, b2' -> b, sigma' -> sp at 0.
 * variant selects the member: "linear" (exactly linear coefficients) or
 * "perturbed" (bounded nonlinear corrections away from zero); NULL means
 * "linear". */
SPK_API spk_status spk_model_asym_linear(const char* variant, double a,
                                         double b, double sigma_prime,
                                         double lambda, double epsilon,
                                         spk_model** out);

/* User-supplied coefficients; ctx is passed through unchanged. sigma_prime
 * may be NULL (the transformed simulation scheme then refuses the model) and
 * taylor may be NULL. The callables must be pure and thread-safe. */
typedef double (*spk_coeff_fn)(double x, void* ctx);
SPK_API spk_status spk_model_custom(spk_coeff_fn b1, spk_coeff_fn b2,
                                    spk_coeff_fn sigma,
                                    spk_coeff_fn sigma_prime,
                                    const spk_taylor_bounds* taylor,
                                    double lambda, double epsilon, void* ctx,
                                    spk_model** out);

SPK_API void spk_model_free(spk_model* m);

/* (lambda^2/2)(epsilon b1(x) - b2(x)) resp. lambda sigma(x). */
SPK_API spk_status spk_model_drift(const spk_model* m, double x, double* out);
SPK_API spk_status spk_model_diffusion(const spk_model* m, double x,
                                       double* out);

typedef struct {
  double x;
  double b1_err, b1_bound;
  double b2_err, b2_bound;
  double s2_err, s2_bound;
  int32_t pass;
} spk_validation_row;

/* Checks the declared remainder bounds on a grid of points in (0, delta0].
 * rows_out must hold n entries. constraint_ok reports whether delta0 is
 * small enough for the bounds to be meaningful at all. */
SPK_API spk_status spk_model_validate(const spk_model* m,
                                      const spk_taylor_bounds* bounds,
                                      const double* grid, size_t n,
                                      spk_validation_row* rows_out,
                                      int32_t* constraint_ok,
                                      int32_t* all_pass);

/* Regeneration window alpha(eps) < beta(eps). */
SPK_API spk_status spk_boundaries_linear(double alpha_mult, double beta_mult,
                                         spk_boundaries** out);
SPK_API spk_status spk_boundaries_rabi(double b, spk_boundaries** out);
SPK_API void spk_boundaries_free(spk_boundaries* b);
SPK_API spk_status spk_boundaries_eval(const spk_boundaries* b, double epsilon,
                                       double* alpha, double* beta);

/* ------------------------------------------------------------------ */
/* Analytic quantities (quadrature)                                    */
/* ------------------------------------------------------------------ */

/* P_x(hit R before r) for r <= x <= R; exact 0/1 at the endpoints. */
SPK_API spk_status spk_hitting_prob(const spk_model* m, double x, double r,
                                    double R, double* out);

/* Probability that an excursion from beta(eps) reaches z before alpha(eps).
 * The _log variant stays usable where the value underflows doubles. */
SPK_API spk_status spk_spike_prob(const spk_model* m,
                                  const spk_boundaries* bounds, double z,
                                  double* out);
SPK_API spk_status spk_spike_prob_log(const spk_model* m,
                                      const spk_boundaries* bounds, double z,
                                      double* out);

/* Boundary treatment for exit-time problems on (lower, upper). */
enum {
  SPK_KERNEL_TWO_ABSORBING = 0,
  SPK_KERNEL_UPPER_ABSORBING = 1,
  SPK_KERNEL_LOWER_ABSORBING = 2
};

/* Expected exit time resp. its second moment from `start`, via the Green
 * kernel of the chosen boundary problem. */
SPK_API spk_status spk_expected_exit_time(const spk_model* m, double start,
                                          double lower, double upper,
                                          int32_t kernel_kind, double* out);
SPK_API spk_status spk_exit_time_second_moment(const spk_model* m,
                                               double start, double lower,
                                               double upper,
                                               int32_t kernel_kind,
                                               double* out);

/* Moments of the crossing time from `start` down to `lower` for the
 * diffusion conditioned never to reach z (Doob transform). */
SPK_API spk_status spk_conditioned_downcross_mean(const spk_model* m,
                                                  double lower, double z,
                                                  double start, double* out);
SPK_API spk_status spk_conditioned_downcross_second_moment(
    const spk_model* m, double lower, double z, double start, double* out);

/* ------------------------------------------------------------------ */
/* Scaling limits                                                      */
/* ------------------------------------------------------------------ */

typedef struct {
  double eps;
  double e_up;     /* mean time alpha(eps) -> beta(eps), lambda = 1 clock */
  double e_down;   /* mean conditioned return time beta(eps) -> alpha(eps) */
  double kappa;    /* 1 / (e_up + e_down) */
  double cycle_m2; /* second moment of the full cycle length */
} spk_kappa_row;

/* Cycle moments along a strictly decreasing epsilon grid for the family the
 * model handle was built from, with a first-order extrapolation of kappa
 * toward eps = 0. Custom models are rejected: the library cannot vary their
 * epsilon. rows_out must hold n entries. */
SPK_API spk_status spk_kappa_numeric(const spk_model* family_proto,
                                     const spk_boundaries* bounds, double z,
                                     const double* eps_grid, size_t n,
                                     spk_kappa_row* rows_out,
                                     double* kappa_limit,
                                     double* error_estimate,
                                     int32_t* extrapolation_ok);

/* Closed-form limit rates. */
SPK_API spk_status spk_kappa_limit_asym_linear(double a, double b,
                                               double sigma_prime,
                                               double alpha_mult,
                                               double beta_mult, double* out);
SPK_API spk_status spk_kappa_limit_rabi(double b, double* out);

/* Limit probability of returning to the collapsing regeneration level
 * before z when started from x in (0, z). */
SPK_API spk_status spk_alpha_xz(const spk_model* m, double x, double z,
                                double* out);

/* Rate correction for calibrating the curve at level 1 but observing spikes
 * at level z; exactly 1 at z = 1. */
SPK_API spk_status spk_q_of_z(const spk_model* m, double z, double* out);

/* Noise scale along the curve lambda^2 spike_prob(eps, z_cal) = J. */
SPK_API spk_status spk_scaling_lambda(const spk_model* family_proto,
                                      const spk_boundaries* bounds,
                                      double z_cal, double J, double eps,
                                      double* out);

/* Limiting hitting-time law: an atom at 0 of mass 1 - alpha_xz plus an
 * Exp(rate) component, rate = kappa J (or kappa J / q_z when q_z is given).
 * Pass q_z = NULL when the calibration and observation levels coincide. */
typedef struct {
  double kappa;
  double J;
  double alpha_xz;
  double atom_weight;
  double rate;
} spk_mixture;

SPK_API spk_status spk_mixture_law(double kappa, double J, double alpha,
                                   const double* q_z, spk_mixture* out);
SPK_API double spk_mixture_cdf(const spk_mixture* law, double t);
/* P(T >= t); equals 1 at t = 0 even with an atom there. */
SPK_API double spk_mixture_survival(const spk_mixture* law, double t);

/* Poisson-approximation total variation bound p/(2 sqrt(1-p)) + dev. */
SPK_API spk_status spk_tv_bound(double p, double mean_abs_dev, double* out);

/* Small-eps spike probability of the quartic-noise family started at
 * eps/b + l eps^2 with target z, and its log. */
SPK_API spk_status spk_rabi_spike_prob_asymptotic(double b, double eps,
                                                  double l, double z,
                                                  double* out);
SPK_API spk_status spk_rabi_spike_prob_asymptotic_log(double b, double eps,
                                                      double l, double z,
                                                      double* out);

/* Total mass of the unnormalized invariant density of the quartic-noise
 * family (a calibration diagnostic). */
SPK_API spk_status spk_z_eps(double b, double eps, double* out);
SPK_API spk_status spk_z_eps_log(double b, double eps, double* out);

/* ------------------------------------------------------------------ */
/* Monte Carlo engine                                                  */
/* ------------------------------------------------------------------ */

enum { SPK_SCHEME_EULER_TRANSFORMED = 0, SPK_SCHEME_EULER_NATIVE = 1 };

typedef struct {
  int32_t scheme;
  /* Step-size rule: du = min(dt_max, c_drift sigma^2/drift^2,
   * c_bar dist^2/sigma^2) on the lambda-free clock u = lambda^2 t. */
  double dt_max;
  double c_drift;
  double c_bar;
  /* Brownian-bridge barrier-crossing test between grid points. */
  int32_t barrier_refine;
  uint64_t rng_master_seed;
  /* Hard cap on steps per sampling call; exceeding it fails with
   * SPK_ERR_BUDGET. */
  uint64_t step_budget;
} spk_sim_config;

SPK_API void spk_sim_config_default(spk_sim_config* out);

/* Sampler for one (model, boundaries, z, config) tuple. */
SPK_API spk_status spk_engine_new(const spk_model* m,
                                  const spk_boundaries* bounds, double z,
                                  const spk_sim_config* cfg, spk_engine** out);
SPK_API void spk_engine_free(spk_engine* e);
SPK_API spk_status spk_engine_levels(const spk_engine* e, double* alpha,
                                     double* beta, double* z);

enum { SPK_HIT_LOW = 0, SPK_HIT_HIGH = 1 };

typedef struct {
  int32_t which;    /* SPK_HIT_LOW or SPK_HIT_HIGH */
  double time;      /* model-clock exit time */
  double max_level; /* running maximum up to the exit */
} spk_hit_result;

/* First exit of (low, high) from x0 in [low, high]. */
SPK_API spk_status spk_engine_until_hit(const spk_engine* e, double x0,
                                        double low, double high,
                                        uint64_t seed, spk_hit_result* out);

typedef struct {
  double tau;       /* time of the up-crossing alpha -> beta */
  double sigma;     /* total cycle time back at alpha */
  double max_level; /* cycle maximum */
  int32_t spike;    /* reached z during the down-phase */
  int32_t conditioned;
} spk_cycle_record;

/* One regeneration cycle from alpha(eps); conditioned != 0 samples the
 * down-phase under the law conditioned to avoid z. */
SPK_API spk_status spk_engine_cycle(const spk_engine* e, uint64_t seed,
                                    int32_t conditioned,
                                    spk_cycle_record* out);

/* Down-crossing time beta -> alpha conditioned on avoiding z, sampled by
 * rejection; equal in law to the conditioned down-phase of spk_engine_cycle. */
SPK_API spk_status spk_engine_downcross_rejection(const spk_engine* e,
                                                  uint64_t seed, double* out);

/* Runs cycles until the horizon and records the times z was reached. */
SPK_API spk_status spk_engine_spike_process(const spk_engine* e,
                                            double horizon, uint64_t seed,
                                            spk_spike_train** out);

/* First time z is reached from x in (0, z]; zero when x = z. */
SPK_API spk_status spk_engine_hitting_time(const spk_engine* e, double x,
                                           uint64_t seed, double* out);

SPK_API size_t spk_spike_train_count(const spk_spike_train* t);
SPK_API double spk_spike_train_time(const spk_spike_train* t, size_t i);
SPK_API int64_t spk_spike_train_cycles(const spk_spike_train* t);
SPK_API double spk_spike_train_horizon(const spk_spike_train* t);
SPK_API void spk_spike_train_free(spk_spike_train* t);

/* ------------------------------------------------------------------ */
/* Statistics                                                          */
/* ------------------------------------------------------------------ */

/* Wilson score interval for a binomial proportion. */
SPK_API spk_status spk_binomial_ci(int64_t successes, int64_t n, double level,
                                   double* lo, double* hi);

/* One-sample KS against Exp(rate), asymptotic p-value. */
SPK_API spk_status spk_ks_exponential(const double* xs, size_t n, double rate,
                                      double* stat, double* pvalue);

SPK_API spk_status spk_ks_two_sample(const double* a, size_t na,
                                     const double* b, size_t nb, double* stat,
                                     double* pvalue);

typedef struct {
  double t0;
  double atom_fraction_hat;
  double atom_lo, atom_hi; /* Wilson 95% interval for the atom mass */
  double ks_stat, ks_pvalue;
  double rate_hat;
  int64_t n, n_tail;
  int32_t degenerate; /* tail too small to test */
} spk_mixture_report;

/* Splits samples at each t0 into an atom part and a tail, compares the atom
 * fraction with the predicted weight and the shifted tail with Exp(rate).
 * self_calibrated != 0 tests the tail against its own fitted rate instead.
 * rows_out must hold n_t0 entries. */
SPK_API spk_status spk_mixture_test(const double* samples, size_t n,
                                    const spk_mixture* prediction,
                                    const double* t0_grid, size_t n_t0,
                                    int32_t self_calibrated,
                                    spk_mixture_report* rows_out);

/* Variance/mean ratio of counts with a two-sided chi-square p-value under
 * the Poisson null. */
SPK_API spk_status spk_poisson_dispersion(const int64_t* counts, size_t n,
                                          double* index, double* pvalue);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPIKESIM_H */
