#include "spikesim/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spikesim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultTol = 1e-10;

double log2_const() { return std::log(2.0); }

// Geometric ladder of interior hint points; cheap insurance so that adaptive
// passes see the steep region next to the lower edge of cycle windows.
std::vector<double> ladder_hints(double lo, double hi) {
  std::vector<double> h;
  if (!(lo > 0.0) || !(hi > lo)) return h;
  const int n = 12;
  for (int i = 1; i < n; ++i) {
    h.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / n));
  }
  return h;
}

// log p_c and derived log integrands for one model over a fixed query window.
// Presets use their closed-form antiderivative; generic coefficients get a
// signed cumulative table over the window.
class ScaleLog {
 public:
  ScaleLog(const DiffusionModel& m, double lo, double hi,
           double rel_tol = kDefaultTol)
      : model_(m), lo_(lo), hi_(hi) {
    if (m.scale_log_primitive) {
      base_ = m.scale_log_primitive(hi);
    } else {
      if (!(lo > 0.0)) {
        throw std::invalid_argument(
            "scale table for generic coefficients needs a positive lower "
            "edge");
      }
      const DiffusionModel mm = m;
      QuadOptions opt;
      opt.rel_tol = std::min(rel_tol, 1e-11);
      opt.hints = ladder_hints(lo, hi);
      table_.emplace(
          [mm](double l) {
            const double s = mm.sigma(l);
            return (mm.epsilon * mm.b1(l) - mm.b2(l)) / (s * s);
          },
          lo, hi, opt);
    }
  }

  double log_p(double x) const {
    if (model_.scale_log_primitive) {
      return model_.scale_log_primitive(x) - base_;
    }
    return -table_->range(x, hi_);
  }
  double log_f(double x) const { return -log_p(x); }  // log(1/p)
  double log_r(double x) const {
    const double s = model_.sigma(x);
    return log_p(x) - 2.0 * std::log(s) - 2.0 * std::log(model_.lambda);
  }
  const DiffusionModel& model() const { return model_; }

 private:
  DiffusionModel model_;
  double lo_, hi_;
  double base_ = 0.0;
  std::optional<CumulativeIntegral> table_;
};

// Everything the Green-kernel moment formulas need, with the two harmonic
// solutions supplied as log callables so the h-transformed case can reuse
// the machinery with its closed-form scale increments.
struct MomentSpec {
  double l, R;
  std::function<double(double)> log_u;  // constant 0 when u == 1
  std::function<double(double)> log_v;  // constant 0 when v == 1
  std::function<double(double)> log_r;
  double log_pref;  // log(2/K) or log(2)
  std::vector<double> hints;
  double rel_tol = 1e-9;
};

QuadResult must_converge(QuadResult r, const char* what) {
  if (!r.converged) {
    throw QuadratureError(std::string(what) + ": tolerance not reached",
                          r.log_value, r.rel_error);
  }
  return r;
}

double moment1(const MomentSpec& k, double x) {
  QuadOptions opt;
  opt.rel_tol = k.rel_tol;
  opt.hints = k.hints;
  const auto ur = [&k](double y) { return k.log_u(y) + k.log_r(y); };
  const auto vr = [&k](double y) { return k.log_v(y) + k.log_r(y); };
  const double t1 =
      k.log_v(x) +
      must_converge(integrate_log(ur, k.l, x, opt), "exit-time moment").log_value;
  const double t2 =
      k.log_u(x) +
      must_converge(integrate_log(vr, x, k.R, opt), "exit-time moment").log_value;
  const double parts[2] = {t1, t2};
  return std::exp(k.log_pref + log_sum_exp(parts, 2));
}

double moment2(const MomentSpec& k, double x) {
  QuadOptions opt;
  opt.rel_tol = k.rel_tol;
  opt.hints = k.hints;
  const CumulativeLogIntegral T_ur(
      [&k](double y) { return k.log_u(y) + k.log_r(y); }, k.l, k.R, opt);
  const CumulativeLogIntegral T_vr(
      [&k](double y) { return k.log_v(y) + k.log_r(y); }, k.l, k.R, opt);
  const auto log_e1 = [&](double y) {
    const double parts[2] = {k.log_v(y) + T_ur.log_range(k.l, y),
                             k.log_u(y) + T_vr.log_range(y, k.R)};
    return k.log_pref + log_sum_exp(parts, 2);
  };
  const auto inner_lo = [&](double y) {
    return k.log_u(y) + log_e1(y) + k.log_r(y);
  };
  const auto inner_hi = [&](double y) {
    return k.log_v(y) + log_e1(y) + k.log_r(y);
  };
  const double t1 =
      k.log_v(x) +
      must_converge(integrate_log(inner_lo, k.l, x, opt), "second moment").log_value;
  const double t2 =
      k.log_u(x) +
      must_converge(integrate_log(inner_hi, x, k.R, opt), "second moment").log_value;
  const double parts[2] = {t1, t2};
  return std::exp(log2_const() + k.log_pref + log_sum_exp(parts, 2));
}

struct KernelState {
  std::shared_ptr<ScaleLog> sl;
  CumulativeLogIntegral table;  // 1/p over the effective domain
  double l_eff;
  Domain domain;
  KernelKind kind;
};

std::shared_ptr<KernelState> make_kernel_state(const DiffusionModel& m,
                                               Domain domain, KernelKind kind) {
  if (std::isnan(domain.lower) || std::isnan(domain.upper) ||
      !(domain.lower < domain.upper) || domain.lower < 0.0 ||
      domain.upper == kInf) {
    throw std::invalid_argument("green kernel: invalid domain");
  }
  if (domain.lower == 0.0 && kind != KernelKind::UpperAbsorbing) {
    throw std::invalid_argument(
        "green kernel: the scale function diverges at 0; only an "
        "upper-absorbing problem may start the domain there");
  }
  double l_eff = domain.lower;
  if (domain.lower == 0.0) {
    // Mass near the inaccessible origin is clipped where the speed density
    // has fallen 120 nats under its peak.
    ScaleLog probe(m, domain.upper * 1e-14, domain.upper);
    l_eff = lower_truncation_point(
        [&probe](double y) { return probe.log_r(y); }, domain.upper);
  }
  auto sl = std::make_shared<ScaleLog>(m, l_eff, domain.upper);
  QuadOptions opt;
  opt.rel_tol = kDefaultTol;
  opt.hints = ladder_hints(l_eff, domain.upper);
  CumulativeLogIntegral table([sl](double y) { return sl->log_f(y); }, l_eff,
                              domain.upper, opt);
  return std::make_shared<KernelState>(
      KernelState{std::move(sl), std::move(table), l_eff, domain, kind});
}

MomentSpec make_moment_spec(const std::shared_ptr<KernelState>& st) {
  MomentSpec k;
  k.l = st->l_eff;
  k.R = st->domain.upper;
  k.log_r = [st](double y) { return st->sl->log_r(y); };
  k.hints = ladder_hints(k.l, k.R);
  switch (st->kind) {
    case KernelKind::TwoAbsorbing:
      k.log_u = [st](double w) { return st->table.log_range(st->l_eff, w); };
      k.log_v = [st](double w) {
        return st->table.log_range(w, st->domain.upper);
      };
      k.log_pref = log2_const() - st->table.log_total();
      break;
    case KernelKind::UpperAbsorbing:
      k.log_u = [](double) { return 0.0; };
      k.log_v = [st](double w) {
        return st->table.log_range(w, st->domain.upper);
      };
      k.log_pref = log2_const();
      break;
    case KernelKind::LowerAbsorbing:
      k.log_u = [st](double w) { return st->table.log_range(st->l_eff, w); };
      k.log_v = [](double) { return 0.0; };
      k.log_pref = log2_const();
      break;
  }
  return k;
}

void check_start(const Domain& domain, double start) {
  if (std::isnan(start) || start < domain.lower || start > domain.upper) {
    throw std::invalid_argument("start point outside the exit domain");
  }
}

// Shared state of an h-transform: base scale objects on [lower, upper] plus
// the 1/p table that h, h'/h and the transformed scale/speed logs query.
struct HState {
  std::shared_ptr<ScaleLog> sl;
  CumulativeLogIntegral table;
  double lower, upper;
  double log_total;  // log integral of 1/p over the full window
};

std::shared_ptr<HState> make_h_state(const DiffusionModel& m, double lower,
                                     double upper) {
  if (!(lower > 0.0) || !(upper > lower)) {
    throw std::invalid_argument("h_transform: need 0 < lower < upper");
  }
  auto sl = std::make_shared<ScaleLog>(m, lower, upper);
  QuadOptions opt;
  opt.rel_tol = kDefaultTol;
  opt.hints = ladder_hints(lower, upper);
  CumulativeLogIntegral table([sl](double y) { return sl->log_f(y); }, lower,
                              upper, opt);
  const double lt = table.log_total();
  return std::make_shared<HState>(
      HState{std::move(sl), std::move(table), lower, upper, lt});
}

MomentSpec make_h_moment_spec(const std::shared_ptr<HState>& st) {
  // Conditioned process on (lower, upper): lower absorbing, upper shut off
  // by h. Scale increments of the transformed process have the closed form
  //   u_h(w) = K * I(lower, w) / I(w, upper),     K = I(lower, upper),
  // obtained by integrating 1/(p h^2) exactly; the speed log gains 2 log h.
  MomentSpec k;
  k.l = st->lower;
  k.R = st->upper;
  k.log_u = [st](double w) {
    return st->log_total + st->table.log_range(st->lower, w) -
           st->table.log_range(w, st->upper);
  };
  k.log_v = [](double) { return 0.0; };
  k.log_r = [st](double y) {
    const double log_h =
        st->table.log_range(y, st->upper) - st->log_total;
    return st->sl->log_r(y) + 2.0 * log_h;
  };
  k.log_pref = log2_const();
  k.hints = ladder_hints(k.l, k.R);
  return k;
}

}  // namespace

ScaleObjects scale_density_log(const DiffusionModel& m, double anchor,
                               double rel_tol) {
  if (!(anchor > 0.0) || std::isnan(anchor)) {
    throw std::invalid_argument("scale_density_log: anchor must be positive");
  }
  ScaleObjects out;
  out.anchor = anchor;
  out.quadrature_tol = rel_tol;
  if (m.scale_log_primitive) {
    const auto prim = m.scale_log_primitive;
    const double base = prim(anchor);
    out.log_scale_density = [prim, base](double x) {
      if (!(x > 0.0)) throw std::domain_error("log scale density needs x > 0");
      return prim(x) - base;
    };
    return out;
  }
  const DiffusionModel mm = m;
  out.log_scale_density = [mm, anchor, rel_tol](double x) {
    if (!(x > 0.0)) throw std::domain_error("log scale density needs x > 0");
    if (x == anchor) return 0.0;
    QuadOptions opt;
    opt.rel_tol = rel_tol;
    const auto integrand = [&mm](double l) {
      const double s = mm.sigma(l);
      return (mm.epsilon * mm.b1(l) - mm.b2(l)) / (s * s);
    };
    const auto r = integrate(integrand, std::min(x, anchor),
                             std::max(x, anchor), opt);
    if (!r.converged) {
      throw QuadratureError("scale density log: tolerance not reached",
                            r.value, r.abs_error);
    }
    return x > anchor ? r.value : -r.value;
  };
  return out;
}

double hitting_prob(const DiffusionModel& m, double x, double r, double R) {
  if (std::isnan(x) || std::isnan(r) || std::isnan(R) || !(r > 0.0) ||
      r > x || x > R) {
    throw std::invalid_argument("hitting_prob: need 0 < r <= x <= R");
  }
  if (x == r) return 0.0;
  if (x == R) return 1.0;
  ScaleLog sl(m, r, R);
  QuadOptions opt;
  opt.rel_tol = kDefaultTol;
  opt.hints = ladder_hints(r, R);
  const CumulativeLogIntegral table(
      [&sl](double y) { return sl.log_f(y); }, r, R, opt);
  return std::exp(table.log_range(r, x) - table.log_total());
}

double spike_prob_log(const DiffusionModel& m, const CycleBoundaries& bounds,
                      double z) {
  const double alpha = bounds.alpha(m.epsilon);
  const double beta = bounds.beta(m.epsilon);
  if (!(alpha > 0.0) || !(beta > alpha)) {
    throw std::invalid_argument("spike_prob: invalid cycle window");
  }
  if (z == beta) return 0.0;  // log(1)
  if (!(z > beta)) {
    throw std::invalid_argument("spike_prob: need z >= beta(epsilon)");
  }
  ScaleLog sl(m, alpha, z);
  QuadOptions opt;
  opt.rel_tol = kDefaultTol;
  opt.hints = ladder_hints(alpha, z);
  opt.hints.push_back(beta);
  const CumulativeLogIntegral table(
      [&sl](double y) { return sl.log_f(y); }, alpha, z, opt);
  return table.log_range(alpha, beta) - table.log_total();
}

double spike_prob(const DiffusionModel& m, const CycleBoundaries& bounds,
                  double z) {
  return std::exp(spike_prob_log(m, bounds, z));
}

double GreenKernel::log_g(double x, double y) const {
  const double lo = std::min(x, y), hi = std::max(x, y);
  return (log2_const() - log_normalizer) + log_u(lo) + log_v(hi);
}

double GreenKernel::g(double x, double y) const {
  return std::exp(log_g(x, y));
}

GreenKernel green_kernel(const DiffusionModel& m, Domain domain,
                         KernelKind kind) {
  const auto st = make_kernel_state(m, domain, kind);
  GreenKernel k;
  k.domain = domain;
  k.kind = kind;
  switch (kind) {
    case KernelKind::TwoAbsorbing:
      k.log_u = [st](double w) { return st->table.log_range(st->l_eff, w); };
      k.log_v = [st](double w) {
        return st->table.log_range(w, st->domain.upper);
      };
      k.log_normalizer = st->table.log_total();
      break;
    case KernelKind::UpperAbsorbing:
      k.log_u = [](double) { return 0.0; };
      k.log_v = [st](double w) {
        return st->table.log_range(w, st->domain.upper);
      };
      k.log_normalizer = 0.0;
      break;
    case KernelKind::LowerAbsorbing:
      k.log_u = [st](double w) { return st->table.log_range(st->l_eff, w); };
      k.log_v = [](double) { return 0.0; };
      k.log_normalizer = 0.0;
      break;
  }
  const auto lu = k.log_u;
  const auto lv = k.log_v;
  k.u = [lu](double w) { return std::exp(lu(w)); };
  k.v = [lv](double w) { return std::exp(lv(w)); };
  return k;
}

double expected_exit_time(const DiffusionModel& m, double start, Domain domain,
                          KernelKind kind) {
  check_start(domain, start);
  const auto st = make_kernel_state(m, domain, kind);
  const MomentSpec spec = make_moment_spec(st);
  return moment1(spec, std::max(start, spec.l));
}

double exit_time_second_moment(const DiffusionModel& m, double start,
                               Domain domain, KernelKind kind) {
  check_start(domain, start);
  const auto st = make_kernel_state(m, domain, kind);
  const MomentSpec spec = make_moment_spec(st);
  return moment2(spec, std::max(start, spec.l));
}

HTransformModel h_transform(const DiffusionModel& m, double lower,
                            double upper) {
  const auto st = make_h_state(m, lower, upper);
  HTransformModel h;
  h.base = m;
  h.lower = lower;
  h.upper = upper;
  h.log_h = [st](double x) {
    return st->table.log_range(x, st->upper) - st->log_total;
  };
  const auto log_h = h.log_h;
  h.h = [log_h](double x) { return std::exp(log_h(x)); };
  h.h_ratio = [st](double x) {
    return -std::exp(st->sl->log_f(x) - st->table.log_range(x, st->upper));
  };
  h.log_ph = [st, log_h](double x) {
    return st->sl->log_p(x) + 2.0 * log_h(x);
  };
  h.log_rh = [st, log_h](double x) {
    return st->sl->log_r(x) + 2.0 * log_h(x);
  };
  const DiffusionModel base = m;
  const auto ratio = h.h_ratio;
  h.drift = [base, ratio](double x) {
    const double s = base.sigma(x);
    return drift(base, x) + base.lambda * base.lambda * s * s * ratio(x);
  };
  return h;
}

double conditioned_downcross_mean(const DiffusionModel& m, double lower,
                                  double z, double start) {
  if (!(start >= lower) || !(start <= z)) {
    throw std::invalid_argument("conditioned downcross: start outside window");
  }
  const auto st = make_h_state(m, lower, z);
  return moment1(make_h_moment_spec(st), start);
}

double conditioned_downcross_second_moment(const DiffusionModel& m,
                                           double lower, double z,
                                           double start) {
  if (!(start >= lower) || !(start <= z)) {
    throw std::invalid_argument("conditioned downcross: start outside window");
  }
  const auto st = make_h_state(m, lower, z);
  return moment2(make_h_moment_spec(st), start);
}

}  // namespace spikesim
