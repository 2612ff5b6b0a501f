#include "spikesim/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "spikesim/quadrature.hpp"

namespace spikesim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || std::isnan(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

void check_base_params(double lambda, double epsilon) {
  check_positive(lambda, "lambda");
  // epsilon == 0 switches the repulsive term off; analytic hitting
  // probabilities remain well defined, cycles do not.
  if (!(epsilon >= 0.0) || std::isnan(epsilon)) {
    throw std::invalid_argument("epsilon must be nonnegative");
  }
}

}  // namespace

DiffusionModel make_bb_linear(double b, double lambda, double epsilon) {
  check_positive(b, "b");
  check_base_params(lambda, epsilon);
  DiffusionModel m;
  m.family = Family::BBLinear;
  m.b1 = [](double) { return 1.0; };
  m.b2 = [b](double x) { return b * x; };
  m.sigma = [](double x) { return x; };
  m.sigma_prime = [](double) { return 1.0; };
  m.lambda = lambda;
  m.epsilon = epsilon;
  m.b = b;
  m.taylor = TaylorBounds{1.0, b, 1.0, 1e-12, 1.0};
  m.scale_log_primitive = [b, epsilon](double x) {
    return -epsilon / x - b * std::log(x);
  };
  return m;
}

DiffusionModel make_rabi_linearized(double b, double lambda, double epsilon) {
  check_positive(b, "b");
  check_base_params(lambda, epsilon);
  DiffusionModel m;
  m.family = Family::RabiLinearized;
  m.b1 = [](double) { return 1.0; };
  m.b2 = [b](double x) { return b * x; };
  m.sigma = [](double x) { return x * x; };
  m.sigma_prime = [](double x) { return 2.0 * x; };
  m.lambda = lambda;
  m.epsilon = epsilon;
  m.b = b;
  // sigma'(0) = 0: the linear-class Taylor data does not apply.
  m.taylor = std::nullopt;
  m.scale_log_primitive = [b, epsilon](double x) {
    return -epsilon / (3.0 * x * x * x) + b / (2.0 * x * x);
  };
  return m;
}

DiffusionModel make_asym_linear_linear(double a, double b, double sigma_prime,
                                       double lambda, double epsilon) {
  check_positive(a, "a");
  check_positive(b, "b");
  check_positive(sigma_prime, "sigma_prime");
  check_base_params(lambda, epsilon);
  DiffusionModel m;
  m.family = Family::AsymLinear;
  m.b1 = [a](double) { return a; };
  m.b2 = [b](double x) { return b * x; };
  m.sigma = [sigma_prime](double x) { return sigma_prime * x; };
  m.sigma_prime = [sigma_prime](double) { return sigma_prime; };
  m.lambda = lambda;
  m.epsilon = epsilon;
  m.b = b;
  const double floor = std::min({a, b, sigma_prime * sigma_prime});
  m.taylor = TaylorBounds{a, b, sigma_prime, 1.0, 0.25 * floor};
  return m;
}

DiffusionModel make_asym_linear_perturbed(double a, double b,
                                          double sigma_prime, double lambda,
                                          double epsilon) {
  check_positive(a, "a");
  check_positive(b, "b");
  check_positive(sigma_prime, "sigma_prime");
  check_base_params(lambda, epsilon);
  DiffusionModel m;
  m.family = Family::AsymLinear;
  // Same derivatives at zero as the linear member, with bounded smooth
  // corrections: |b1 - a| <= (a/2) x, |b2 - b x| <= (b/2) x^2,
  // |sigma^2 - sigma_prime^2 x^2| <= (sigma_prime^2/2) x^3.
  m.b1 = [a](double x) { return a * (1.0 + x / (2.0 * (1.0 + x))); };
  m.b2 = [b](double x) { return b * x + 0.5 * b * x * x / (1.0 + x); };
  m.sigma = [sigma_prime](double x) {
    return sigma_prime * x * std::sqrt(1.0 + x / (2.0 * (1.0 + x)));
  };
  m.sigma_prime = [sigma_prime](double x) {
    const double h = x / (2.0 * (1.0 + x));
    const double g = std::sqrt(1.0 + h);
    const double hp = 0.5 / ((1.0 + x) * (1.0 + x));
    return sigma_prime * (g + x * hp / (2.0 * g));
  };
  m.lambda = lambda;
  m.epsilon = epsilon;
  m.b = b;
  const double s2 = sigma_prime * sigma_prime;
  const double big_m = 0.5 * std::max({a, b, s2});
  const double delta0 = 0.5 * std::min({a, b, s2}) / (2.0 * big_m);
  m.taylor = TaylorBounds{a, b, sigma_prime, big_m, delta0};
  return m;
}

DiffusionModel make_custom(std::function<double(double)> b1,
                           std::function<double(double)> b2,
                           std::function<double(double)> sigma,
                           std::function<double(double)> sigma_prime,
                           std::optional<TaylorBounds> taylor, double lambda,
                           double epsilon) {
  if (!b1 || !b2 || !sigma) {
    throw std::invalid_argument("custom model needs b1, b2 and sigma");
  }
  check_base_params(lambda, epsilon);
  DiffusionModel m;
  m.family = Family::Custom;
  m.b1 = std::move(b1);
  m.b2 = std::move(b2);
  m.sigma = std::move(sigma);
  m.sigma_prime = std::move(sigma_prime);
  m.lambda = lambda;
  m.epsilon = epsilon;
  m.b = taylor ? taylor->b : 1.0;
  m.taylor = taylor;
  return m;
}

CycleBoundaries make_linear_boundaries(double alpha_mult, double beta_mult) {
  check_positive(alpha_mult, "alpha_mult");
  if (!(beta_mult > alpha_mult)) {
    throw std::invalid_argument("beta_mult must exceed alpha_mult");
  }
  return {[alpha_mult](double eps) { return alpha_mult * eps; },
          [beta_mult](double eps) { return beta_mult * eps; }};
}

CycleBoundaries make_rabi_boundaries(double b) {
  check_positive(b, "b");
  return {[b](double eps) { return eps / b; },
          [b](double eps) { return eps / b + eps * eps; }};
}

double drift(const DiffusionModel& m, double x) {
  if (!(x > 0.0)) throw std::domain_error("drift: x must be positive");
  return 0.5 * m.lambda * m.lambda * (m.epsilon * m.b1(x) - m.b2(x));
}

double diffusion_coeff(const DiffusionModel& m, double x) {
  if (x < 0.0 || std::isnan(x)) {
    throw std::domain_error("diffusion_coeff: x must be nonnegative");
  }
  if (x == 0.0) return 0.0;
  return m.lambda * m.sigma(x);
}

TransformedModel feller_transform(const DiffusionModel& m, double anchor) {
  if (!m.sigma_prime) {
    throw std::invalid_argument(
        "feller_transform: model lacks a sigma derivative");
  }
  if (std::isnan(anchor) || anchor <= 0.0) {
    throw std::invalid_argument("feller_transform: anchor must be positive");
  }
  TransformedModel t;
  t.anchor = anchor;
  t.lambda = m.lambda;

  if (m.family == Family::BBLinear) {
    if (anchor == kInf) {
      throw std::invalid_argument(
          "feller_transform: 1/sigma is not integrable at infinity");
    }
    t.to_y = [anchor](double x) { return std::log(x / anchor); };
    t.to_x = [anchor](double y) { return anchor * std::exp(y); };
  } else if (m.family == Family::RabiLinearized) {
    const double base = anchor == kInf ? 0.0 : 1.0 / anchor;
    t.to_y = [base](double x) { return base - 1.0 / x; };
    t.to_x = [base](double y) { return 1.0 / (base - y); };
  } else {
    if (anchor == kInf) {
      throw std::invalid_argument(
          "feller_transform: infinite anchor is only supported for presets "
          "with a closed-form coordinate map");
    }
    const auto sigma = m.sigma;
    const auto inv_sigma = [sigma](double u) { return 1.0 / sigma(u); };
    t.to_y = [inv_sigma, anchor](double x) {
      if (!(x > 0.0)) throw std::domain_error("to_y: x must be positive");
      const double sign = x >= anchor ? 1.0 : -1.0;
      const auto r = integrate(inv_sigma, std::min(x, anchor),
                               std::max(x, anchor));
      return sign * r.value;
    };
    const auto to_y = t.to_y;
    t.to_x = [to_y, sigma, anchor](double y) {
      // Newton with bisection fallback on the strictly increasing map.
      double lo = anchor, hi = anchor;
      while (to_y(lo) > y) lo *= 0.5;
      while (to_y(hi) < y) hi *= 2.0;
      double x = 0.5 * (lo + hi);
      for (int it = 0; it < 80; ++it) {
        const double g = to_y(x) - y;
        if (g > 0) hi = x; else lo = x;
        const double step = g * sigma(x);
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * (std::abs(x) + 1e-300)) return next;
        x = next;
      }
      return x;
    };
  }

  const DiffusionModel base_model = m;
  const auto to_x = t.to_x;
  t.drift_y = [base_model, to_x](double y) {
    const double x = to_x(y);
    const double ll = base_model.lambda * base_model.lambda;
    return drift(base_model, x) / base_model.sigma(x) -
           0.5 * ll * base_model.sigma_prime(x);
  };
  return t;
}

ValidationReport validate_model(const DiffusionModel& m,
                                const TaylorBounds& bounds,
                                const std::vector<double>& grid) {
  check_positive(bounds.a, "bounds.a");
  check_positive(bounds.b, "bounds.b");
  check_positive(bounds.sigma_prime, "bounds.sigma_prime");
  check_positive(bounds.M, "bounds.M");
  check_positive(bounds.delta0, "bounds.delta0");
  ValidationReport report;
  const double s2 = bounds.sigma_prime * bounds.sigma_prime;
  report.constraint_ok =
      bounds.delta0 < std::min({bounds.a, bounds.b, s2}) / (2.0 * bounds.M);
  report.all_pass = report.constraint_ok;
  for (double x : grid) {
    if (!(x > 0.0) || x > bounds.delta0) {
      throw std::invalid_argument(
          "validate_model: grid points must lie in (0, delta0]");
    }
    ValidationRow row;
    row.x = x;
    row.b1_err = std::abs(m.b1(x) - bounds.a);
    row.b1_bound = bounds.M * x;
    row.b2_err = std::abs(m.b2(x) - bounds.b * x);
    row.b2_bound = bounds.M * x * x;
    const double sig = m.sigma(x);
    row.s2_err = std::abs(sig * sig - s2 * x * x);
    row.s2_bound = bounds.M * x * x * x;
    row.pass = row.b1_err <= row.b1_bound && row.b2_err <= row.b2_bound &&
               row.s2_err <= row.s2_bound;
    report.all_pass = report.all_pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace spikesim
