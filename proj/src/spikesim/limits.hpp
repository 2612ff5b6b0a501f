#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "spikesim/analytic.hpp"
#include "spikesim/model.hpp"

namespace spikesim {

// Cycle moments for one epsilon, reported in the lambda = 1 clock.
struct KappaRow {
  double eps;
  double e_up;      // mean time from alpha(eps) up to beta(eps)
  double e_down;    // mean conditioned return time from beta(eps) to alpha(eps)
  double kappa;     // 1 / (e_up + e_down)
  double cycle_m2;  // second moment of the full cycle length
};

struct KappaResult {
  std::vector<KappaRow> rows;
  double kappa_limit;     // extrapolated; smallest-eps value on fallback
  double error_estimate;  // |extrapolated - smallest-eps kappa|
  bool extrapolation_ok;  // the linear-in-eps model explained the grid
};

// kappa_eps = 1/(E_up + E_down) on a strictly decreasing epsilon grid, with a
// first-order Richardson extrapolation toward eps = 0. The moments come from
// `analytic` and are multiplied by lambda^2 so the result does not depend on
// the lambda the factory happens to attach to each model.
KappaResult kappa_numeric(
    const std::function<DiffusionModel(double)>& model_at_eps,
    const CycleBoundaries& bounds, double z,
    const std::vector<double>& eps_grid);

// Limiting cycle rate for the asymptotically linear class (b1 -> a,
// b2' -> b, sigma' -> s at 0) with window multipliers alpha_mult < beta_mult.
// Assembled as the four double integrals of the cycle decomposition; their
// union is (alpha_mult, beta_mult) x (0, inf) and the sum factorizes, which
// the tests exploit as an independent route.
double kappa_limit_asym_linear(double a, double b, double sigma_prime,
                               double alpha_mult, double beta_mult);

// Limiting cycle rate for the quartic-noise preset:
// 1/kappa = 4 b^4 (int_0^1 e^{b^5 w^2/2} dw) (int_0^inf e^{-b^5 y^2/2} dy).
double kappa_limit_rabi(double b);

// Limit of the probability that the diffusion started at x returns to the
// regeneration level (which collapses to 0) before reaching z. Computed from
// the eps = 0 scale density of the model's coefficients.
double alpha_xz(const DiffusionModel& m, double x, double z);

// Calibration-level correction: q(z) = 1 - alpha_xz(z, 1) for z <= 1 and
// 1/(1 - alpha_xz(1, z)) for z > 1; exactly 1 at z = 1.
double q_of_z(const DiffusionModel& m, double z);

// Limiting law of the rescaled hitting time: an atom at 0 of mass
// 1 - alpha plus an exponential component.
struct LimitPrediction {
  double kappa;
  double J;
  double alpha_xz;
  double atom_weight;                      // 1 - alpha_xz
  double rate;                             // kappa J, or kappa J / q_z
  std::function<double(double)> cdf;       // P(T <= t)
  std::function<double(double)> survival;  // P(T >= t); equals 1 at t = 0
};

LimitPrediction mixture_law(double kappa, double J, double alpha,
                            std::optional<double> q_z = std::nullopt);

// Noise scale along the curve lambda^2 spike_prob(eps, z_cal) = J.
double scaling_lambda(
    const std::function<DiffusionModel(double)>& model_at_eps,
    const CycleBoundaries& bounds, double z_cal, double J, double eps);

// Poisson-approximation total variation bound p/(2 sqrt(1-p)) + mean_abs_dev.
double tv_bound(double p, double mean_abs_dev);

// Small-eps spike probability of the quartic-noise preset started at
// eps/b + l eps^2 with target z:
//   eps^2 e^{-b^3/(6 eps^2)} int_0^l e^{b^5 x^2/2} dx / int_0^z e^{-b/(2x^2)} dx.
// The log variant stays usable where the value underflows doubles.
double rabi_spike_prob_asymptotic_log(double b, double eps, double l, double z);
double rabi_spike_prob_asymptotic(double b, double eps, double l, double z);

// Total mass int_0^inf x^-4 exp(-eps/(3x^3) + b/(2x^2)) dx of the
// unnormalized invariant density of the quartic-noise model; a diagnostic
// for comparing calibration curves, never asserted against them.
double z_eps_log(double b, double eps);
double z_eps(double b, double eps);

}  // namespace spikesim
