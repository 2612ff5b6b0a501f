#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spikesim {

// One-dimensional diffusion on (0, infinity):
//   dX_t = (lambda^2/2) (epsilon b1(X_t) - b2(X_t)) dt + lambda sigma(X_t) dB_t
// with sigma(x) = 0 exactly at x = 0 and positive inside. The coefficient
// shapes come either from a named preset or from user callables.
enum class Family { BBLinear, AsymLinear, RabiLinearized, Custom };

// Declared behavior of (b1, b2, sigma) near zero: b1(0) = a, b2'(0) = b,
// sigma'(0) = sigma_prime, with remainders bounded by M x, M x^2, M x^3 on
// [0, delta0]. Meaningful when delta0 < min(a, b, sigma_prime^2) / (2 M).
struct TaylorBounds {
  double a;
  double b;
  double sigma_prime;
  double M;
  double delta0;
};

struct DiffusionModel {
  Family family = Family::Custom;
  std::function<double(double)> b1;
  std::function<double(double)> b2;
  std::function<double(double)> sigma;
  // Derivative of sigma; required by the unit-diffusion simulation scheme.
  // Presets always provide it, Custom models may omit it.
  std::function<double(double)> sigma_prime;
  double lambda = 1.0;
  double epsilon = 0.0;
  // Linear coefficient of b2 at zero for presets (slope b above).
  double b = 1.0;
  std::optional<TaylorBounds> taylor;
  // Closed-form antiderivative L of (epsilon b1 - b2)/sigma^2 when the
  // family admits one; log of the scale density is then L(x) - L(anchor).
  // Null for generic coefficients, which go through quadrature.
  std::function<double(double)> scale_log_primitive;
};

// alpha(epsilon) < beta(epsilon): the regeneration window near zero. A cycle
// runs from alpha up to beta and back.
struct CycleBoundaries {
  std::function<double(double)> alpha;
  std::function<double(double)> beta;
};

DiffusionModel make_bb_linear(double b, double lambda, double epsilon);
DiffusionModel make_rabi_linearized(double b, double lambda, double epsilon);
// Exactly-linear member of the asymptotically-linear class (b1 = a,
// b2 = b x, sigma = sigma_prime x) exercising the generic quadrature path.
DiffusionModel make_asym_linear_linear(double a, double b, double sigma_prime,
                                       double lambda, double epsilon);
// Same behavior at zero with bounded nonlinear corrections away from it.
DiffusionModel make_asym_linear_perturbed(double a, double b,
                                          double sigma_prime, double lambda,
                                          double epsilon);
DiffusionModel make_custom(std::function<double(double)> b1,
                           std::function<double(double)> b2,
                           std::function<double(double)> sigma,
                           std::function<double(double)> sigma_prime,
                           std::optional<TaylorBounds> taylor, double lambda,
                           double epsilon);

CycleBoundaries make_linear_boundaries(double alpha_mult = 1.0,
                                       double beta_mult = 2.0);
// Window suited to quartic noise: alpha = eps/b, beta = eps/b + eps^2.
CycleBoundaries make_rabi_boundaries(double b);

// (lambda^2/2)(epsilon b1(x) - b2(x)); domain error for x <= 0.
double drift(const DiffusionModel& m, double x);

// lambda sigma(x); exactly 0 at x = 0; domain error for x < 0.
double diffusion_coeff(const DiffusionModel& m, double x);

// Unit-diffusion coordinates Y = F(X) with F' = 1/sigma. The anchor fixes
// F(anchor) = 0 and may be +infinity when 1/sigma is integrable at infinity
// (quartic noise); the drift below is the Ito drift of Y and the diffusion
// coefficient of Y is the constant lambda.
struct TransformedModel {
  double anchor;
  double lambda;
  std::function<double(double)> to_y;
  std::function<double(double)> to_x;
  std::function<double(double)> drift_y;
};

TransformedModel feller_transform(const DiffusionModel& m, double anchor);

struct ValidationRow {
  double x;
  double b1_err, b1_bound;
  double b2_err, b2_bound;
  double s2_err, s2_bound;
  bool pass;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  // delta0 < min(a, b, sigma_prime^2) / (2 M) as required for the bounds to
  // be usable at all.
  bool constraint_ok;
  bool all_pass;
};

// Checks the three declared remainder bounds on the grid. Grid points above
// bounds.delta0 are rejected with an invalid-argument error.
ValidationReport validate_model(const DiffusionModel& m,
                                const TaylorBounds& bounds,
                                const std::vector<double>& grid);

}  // namespace spikesim
