#include "spikesim/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "spikesim/quadrature.hpp"

namespace spikesim {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double checked_log_integral(const LogFn& f, double a, double b,
                            const QuadOptions& opt, const char* what) {
  const QuadResult r = integrate_log(f, a, b, opt);
  if (!r.converged) {
    throw QuadratureError(std::string(what) + ": tolerance not reached",
                          r.log_value, r.rel_error);
  }
  return r.log_value;
}

}  // namespace

KappaResult kappa_numeric(
    const std::function<DiffusionModel(double)>& model_at_eps,
    const CycleBoundaries& bounds, double z,
    const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) {
    throw std::invalid_argument("kappa_numeric: empty epsilon grid");
  }
  for (size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0) ||
        (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))) {
      throw std::invalid_argument(
          "kappa_numeric: epsilon grid must be positive and strictly "
          "decreasing");
    }
  }

  KappaResult out;
  for (double eps : eps_grid) {
    const DiffusionModel m = model_at_eps(eps);
    const double al = bounds.alpha(eps);
    const double be = bounds.beta(eps);
    if (!(al > 0.0) || !(be > al) || !(z > be)) {
      throw std::invalid_argument(
          "kappa_numeric: need 0 < alpha(eps) < beta(eps) < z");
    }
    const double ll = m.lambda * m.lambda;
    const Domain up{0.0, be};
    const double e_up =
        ll * expected_exit_time(m, al, up, KernelKind::UpperAbsorbing);
    const double m2_up =
        ll * ll * exit_time_second_moment(m, al, up, KernelKind::UpperAbsorbing);
    const double e_dn = ll * conditioned_downcross_mean(m, al, z, be);
    const double m2_dn =
        ll * ll * conditioned_downcross_second_moment(m, al, z, be);
    // The two phases are independent given the regeneration structure, so
    // the cycle second moment expands across the split at beta.
    const double cycle_m2 = m2_up + 2.0 * e_up * e_dn + m2_dn;
    out.rows.push_back({eps, e_up, e_dn, 1.0 / (e_up + e_dn), cycle_m2});
  }

  const size_t n = out.rows.size();
  if (n == 1) {
    out.kappa_limit = out.rows[0].kappa;
    out.error_estimate = kNan;
    out.extrapolation_ok = false;
    return out;
  }
  // kappa_eps = kappa + c eps to first order; eliminate c with the two
  // smallest epsilons, then demand the fitted line explain the third-smallest
  // point to 5% before trusting the extrapolation.
  const KappaRow& r1 = out.rows[n - 2];
  const KappaRow& r0 = out.rows[n - 1];
  const double slope = (r1.kappa - r0.kappa) / (r1.eps - r0.eps);
  const double extr = r0.kappa - slope * r0.eps;
  out.error_estimate = std::abs(extr - r0.kappa);
  out.extrapolation_ok = true;
  if (n >= 3) {
    const KappaRow& r2 = out.rows[n - 3];
    const double pred = extr + slope * r2.eps;
    out.extrapolation_ok = std::abs(pred - r2.kappa) <= 0.05 * r2.kappa;
  }
  out.kappa_limit = out.extrapolation_ok ? extr : r0.kappa;
  return out;
}

double kappa_limit_asym_linear(double a, double b, double sigma_prime,
                               double alpha_mult, double beta_mult) {
  if (!(a > 0.0) || !(b > 0.0) || !(sigma_prime > 0.0) ||
      !(alpha_mult > 0.0) || !(alpha_mult < beta_mult)) {
    throw std::invalid_argument("kappa_limit_asym_linear: bad parameters");
  }
  const double s2 = sigma_prime * sigma_prime;
  const double c = a / s2;
  const double mexp = b / s2;
  const double A = alpha_mult, B = beta_mult;

  // After y -> eps y the window collapses to (A, B) and the cycle moments
  // lose their eps dependence: the up variable w carries e^{c/w} w^m (the
  // rescaled 1/p) and the down variable y carries e^{-c/y} y^{-m-2} (the
  // rescaled speed density).
  const auto log_up = [c, mexp](double w) { return c / w + mexp * std::log(w); };
  const auto log_dn = [c, mexp](double y) {
    return -c / y - (mexp + 2.0) * std::log(y);
  };
  QuadOptions opt;
  opt.rel_tol = 1e-10;

  const double y_lo = lower_truncation_point(log_dn, A);
  // Inner y-integrals that do not depend on w.
  const double in_below =
      checked_log_integral(log_dn, y_lo, A, opt, "kappa limit");
  const QuadResult above = integrate_log_upper_infinite(log_dn, B, opt);
  if (!above.converged) {
    throw QuadratureError("kappa limit: tail integral did not converge",
                          above.log_value, above.rel_error);
  }
  const double in_above = above.log_value;

  const auto outer = [&](const std::function<double(double)>& log_inner) {
    return checked_log_integral(
        [&](double w) { return log_up(w) + log_inner(w); }, A, B, opt,
        "kappa limit");
  };
  // Up phase, time spent under the window:    (A,B) x (0,A)
  const double p1 = outer([&](double) { return in_below; });
  // Up phase, time inside the window:         A < y < w < B
  const double p2 = outer([&](double w) {
    return integrate_log(log_dn, A, w, opt).log_value;
  });
  // Conditioned down phase inside the window: A < w < y < B
  const double p3 = outer([&](double w) {
    return integrate_log(log_dn, w, B, opt).log_value;
  });
  // Down phase, time spent above the window:  (A,B) x (B,inf)
  const double p4 = outer([&](double) { return in_above; });

  const double parts[4] = {p1, p2, p3, p4};
  const double inv_kappa =
      (2.0 / s2) * std::exp(log_sum_exp(parts, 4));
  return 1.0 / inv_kappa;
}

double kappa_limit_rabi(double b) {
  if (!(b > 0.0)) {
    throw std::invalid_argument("kappa_limit_rabi: b must be positive");
  }
  const double b5 = std::pow(b, 5.0);
  QuadOptions opt;
  opt.rel_tol = 1e-11;
  const double log_window = checked_log_integral(
      [b5](double w) { return 0.5 * b5 * w * w; }, 0.0, 1.0, opt,
      "kappa_limit_rabi");
  // The Gaussian factor int_0^inf e^{-b^5 y^2/2} dy is exact.
  const double log_gauss = 0.5 * std::log(std::numbers::pi / (2.0 * b5));
  const double log_inv =
      std::log(4.0) + 4.0 * std::log(b) + log_window + log_gauss;
  return std::exp(-log_inv);
}

double alpha_xz(const DiffusionModel& m, double x, double z) {
  if (!(x > 0.0) || !(x < z)) {
    throw std::invalid_argument("alpha_xz: need 0 < x < z");
  }
  // eps = 0 scale density anchored at z: log f0(y) = -int_y^z b2/sigma^2.
  // Evaluated by a fresh signed pass per query; a prefix table over many
  // decades would lose the value to cancellation.
  const DiffusionModel mm = m;
  const auto rate = [mm](double l) {
    const double s = mm.sigma(l);
    return mm.b2(l) / (s * s);
  };
  const auto log_f0 = [&rate, z](double y) {
    QuadOptions opt;
    opt.rel_tol = 1e-12;
    const SignedQuadResult r = integrate(rate, y, z, opt);
    if (!r.converged) {
      throw QuadratureError("alpha_xz: scale integral did not converge",
                            r.value, r.abs_error);
    }
    return -r.value;
  };
  const double lo = std::min(z * 1e-9, 0.5 * x);
  QuadOptions opt;
  opt.rel_tol = 1e-10;
  for (int i = 1; i < 12; ++i) {
    opt.hints.push_back(lo * std::pow(z / lo, i / 12.0));
  }
  const CumulativeLogIntegral table(log_f0, lo, z, opt);
  return std::exp(table.log_range(x, z) - table.log_total());
}

double q_of_z(const DiffusionModel& m, double z) {
  if (!(z > 0.0)) throw std::invalid_argument("q_of_z: z must be positive");
  if (z == 1.0) return 1.0;
  if (z < 1.0) return 1.0 - alpha_xz(m, z, 1.0);
  return 1.0 / (1.0 - alpha_xz(m, 1.0, z));
}

LimitPrediction mixture_law(double kappa, double J, double alpha,
                            std::optional<double> q_z) {
  if (!(kappa > 0.0) || !(J > 0.0) || std::isnan(alpha) || alpha < 0.0 ||
      alpha > 1.0) {
    throw std::invalid_argument("mixture_law: inputs out of range");
  }
  if (q_z && !(*q_z > 0.0)) {
    throw std::invalid_argument("mixture_law: q_z must be positive");
  }
  LimitPrediction out;
  out.kappa = kappa;
  out.J = J;
  out.alpha_xz = alpha;
  out.atom_weight = 1.0 - alpha;
  out.rate = q_z ? kappa * J / *q_z : kappa * J;
  const double rate = out.rate;
  out.cdf = [alpha, rate](double t) {
    if (t < 0.0) return 0.0;
    return 1.0 - alpha * std::exp(-rate * t);
  };
  // P(T >= t): right-continuous survival would drop to alpha at 0; taking
  // the closed event keeps survival(0) = 1 with the atom visible as the
  // immediate jump just after 0.
  out.survival = [alpha, rate](double t) {
    if (t <= 0.0) return 1.0;
    return alpha * std::exp(-rate * t);
  };
  return out;
}

double scaling_lambda(
    const std::function<DiffusionModel(double)>& model_at_eps,
    const CycleBoundaries& bounds, double z_cal, double J, double eps) {
  if (!(J > 0.0) || !(eps > 0.0)) {
    throw std::invalid_argument("scaling_lambda: need J > 0 and eps > 0");
  }
  const double log_p = spike_prob_log(model_at_eps(eps), bounds, z_cal);
  return std::exp(0.5 * (std::log(J) - log_p));
}

double tv_bound(double p, double mean_abs_dev) {
  if (std::isnan(p) || p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("tv_bound: need 0 <= p < 1");
  }
  if (std::isnan(mean_abs_dev) || mean_abs_dev < 0.0) {
    throw std::invalid_argument("tv_bound: deviation term must be >= 0");
  }
  return p / (2.0 * std::sqrt(1.0 - p)) + mean_abs_dev;
}

double rabi_spike_prob_asymptotic_log(double b, double eps, double l,
                                      double z) {
  if (!(b > 0.0) || !(eps > 0.0) || !(z > 0.0) || l < 0.0) {
    throw std::invalid_argument("rabi_spike_prob_asymptotic: bad parameters");
  }
  if (l == 0.0) return -std::numeric_limits<double>::infinity();
  const double b5 = std::pow(b, 5.0);
  QuadOptions opt;
  opt.rel_tol = 1e-11;
  const double log_num = checked_log_integral(
      [b5](double x) { return 0.5 * b5 * x * x; }, 0.0, l, opt,
      "rabi asymptotic numerator");
  const double log_den = checked_log_integral(
      [b](double x) { return -b / (2.0 * x * x); }, 0.0, z, opt,
      "rabi asymptotic denominator");
  return 2.0 * std::log(eps) - b * b * b / (6.0 * eps * eps) + log_num -
         log_den;
}

double rabi_spike_prob_asymptotic(double b, double eps, double l, double z) {
  return std::exp(rabi_spike_prob_asymptotic_log(b, eps, l, z));
}

double z_eps_log(double b, double eps) {
  if (!(b > 0.0) || !(eps > 0.0)) {
    throw std::invalid_argument("z_eps: need b > 0 and eps > 0");
  }
  const auto log_f = [b, eps](double x) {
    return -4.0 * std::log(x) - eps / (3.0 * x * x * x) +
           b / (2.0 * x * x);
  };
  // The integrand peaks near eps/b and dies off both ways; split at 1 and
  // clip the essential singularity at 0.
  const double split = std::max(1.0, 2.0 * eps / b);
  const double lo = lower_truncation_point(log_f, split);
  QuadOptions opt;
  opt.rel_tol = 1e-10;
  opt.hints = {0.5 * eps / b, eps / b, 2.0 * eps / b};
  opt.scan_points = 257;
  const double head =
      checked_log_integral(log_f, lo, split, opt, "z_eps head");
  QuadOptions tail_opt;
  tail_opt.rel_tol = 1e-10;
  const QuadResult tail = integrate_log_upper_infinite(log_f, split, tail_opt);
  if (!tail.converged) {
    throw QuadratureError("z_eps tail did not converge", tail.log_value,
                          tail.rel_error);
  }
  const double parts[2] = {head, tail.log_value};
  return log_sum_exp(parts, 2);
}

double z_eps(double b, double eps) { return std::exp(z_eps_log(b, eps)); }

}  // namespace spikesim
