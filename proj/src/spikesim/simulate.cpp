#include "simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "analytic.hpp"
#include "rng.hpp"

namespace spikesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string budget_message(std::uint64_t steps, double time, double level) {
  std::ostringstream os;
  os << "step budget exceeded after " << steps << " steps (model time "
     << time << ", level " << level << ")";
  return os.str();
}

void check_config(const SimConfig& cfg) {
  if (!(cfg.dt_max > 0.0)) {
    throw std::invalid_argument("dt_max must be positive");
  }
  if (!(cfg.c_drift > 0.0) || !(cfg.c_bar > 0.0)) {
    throw std::invalid_argument("step-rule constants must be positive");
  }
  if (cfg.step_budget == 0) {
    throw std::invalid_argument("step budget must be positive");
  }
}

// Dynamics on the lambda-free clock u = lambda^2 t in the chosen simulation
// coordinate. On that clock the drift and noise coefficients carry no
// lambda, so a single path realization serves every lambda and reported
// times are u / lambda^2.
struct Kinematics {
  bool transformed = true;
  std::function<double(double)> nu;   // drift per unit u-clock
  std::function<double(double)> sig;  // noise coefficient; unused when unit
  std::function<double(double)> to_x;
  std::function<double(double)> to_q;
  double dt_max = 1e-3;
  double c_drift = 0.1;
  double c_bar = 0.25;
  bool bridge = true;
};

Kinematics make_kinematics(const DiffusionModel& m, const SimConfig& cfg) {
  check_config(cfg);
  Kinematics k;
  k.dt_max = cfg.dt_max;
  k.c_drift = cfg.c_drift;
  k.c_bar = cfg.c_bar;
  k.bridge = cfg.barrier_refine;
  k.transformed = cfg.scheme == Scheme::EulerTransformed;
  if (!k.transformed) {
    k.nu = [b1 = m.b1, b2 = m.b2, eps = m.epsilon](double x) {
      return 0.5 * (eps * b1(x) - b2(x));
    };
    k.sig = m.sigma;
    k.to_x = [](double q) { return q; };
    k.to_q = [](double q) { return q; };
    return k;
  }
  const double anchor = m.family == Family::RabiLinearized ? kInf : 1.0;
  auto tm = feller_transform(m, anchor);
  switch (m.family) {
    case Family::BBLinear:
      // y = log x; flat closures keep std::function hops off the hot loop.
      k.nu = [b = m.b, eps = m.epsilon](double y) {
        return 0.5 * (eps * std::exp(-y) - b - 1.0);
      };
      break;
    case Family::RabiLinearized:
      // y = -1/x.
      k.nu = [b = m.b, eps = m.epsilon](double y) {
        return 0.5 * y * (eps * y + b) + 1.0 / y;
      };
      break;
    default: {
      const double inv_ll = 1.0 / (m.lambda * m.lambda);
      k.nu = [dy = tm.drift_y, inv_ll](double y) { return dy(y) * inv_ll; };
      break;
    }
  }
  k.to_x = tm.to_x;
  k.to_q = tm.to_y;
  return k;
}

// Tabulated drift addend of the conditioned (h-transform) dynamics,
//   g(q) = -exp(C(q)) / (wall - q),
// where C varies slowly and is linearly interpolated while the singular
// endpoint factor is kept explicit.
struct HGuide {
  double q0 = 0.0;
  double wall = 0.0;
  double inv_dq = 0.0;
  std::vector<double> c;

  double term(double q) const {
    double t = (q - q0) * inv_dq;
    const double tmax = static_cast<double>(c.size() - 1);
    if (!(t > 0.0)) t = 0.0;
    if (t > tmax) t = tmax;
    std::size_t i = static_cast<std::size_t>(t);
    if (i >= c.size() - 1) i = c.size() - 2;
    const double w = t - static_cast<double>(i);
    const double lc = c[i] + w * (c[i + 1] - c[i]);
    return -std::exp(lc) / (wall - q);
  }
};

struct LegSpec {
  double lo = -kInf;            // absorbing lower barrier
  double hi = kInf;             // absorbing upper barrier
  double wall = kInf;           // non-absorbing ceiling (conditioned legs)
  const HGuide* guide = nullptr;
};

struct LegOut {
  bool hit_high = false;
  double u = 0.0;  // interpolated duration up to barrier contact
  double max_q = 0.0;
};

struct BudgetCtx {
  std::uint64_t left = 0;
  std::uint64_t used = 0;
  double u_done = 0.0;  // u spent in earlier legs, for error reports only
  double lambda2 = 1.0;
};

// One Euler leg from q0 to whichever absorbing barrier is contacted first.
// A contact is an endpoint beyond the barrier (time linearly interpolated)
// or, with barrier_refine, a Brownian-bridge excursion inside a step (time
// taken at the step midpoint). Callers restart follow-up legs exactly at
// the contacted level, so the overshooting endpoint is never reused.
LegOut run_leg(const Kinematics& k, double q0, const LegSpec& s, Rng& rng,
               BudgetCtx& ctx) {
  LegOut out;
  out.max_q = q0;
  double q = q0;
  double u = 0.0;
  const bool guard_wall = s.wall < kInf;
  const bool guard_pos = !k.transformed && s.lo == -kInf;
  for (;;) {
    if (ctx.left == 0) {
      throw StepBudgetError(ctx.used, (ctx.u_done + u) / ctx.lambda2,
                            k.to_x(q));
    }
    --ctx.left;
    ++ctx.used;

    double nu = k.nu(q);
    if (s.guide != nullptr) nu += s.guide->term(q);
    const double sig = k.transformed ? 1.0 : k.sig(q);
    const double s2 = sig * sig;
    double du = k.dt_max;
    if (sig > 0.0 && nu != 0.0) {
      const double by_drift = k.c_drift * s2 / (nu * nu);
      if (by_drift < du) du = by_drift;
    }
    double dist = kInf;
    if (s.lo > -kInf) dist = q - s.lo;
    if (s.hi < kInf) dist = std::min(dist, s.hi - q);
    if (guard_wall) dist = std::min(dist, s.wall - q);
    if (sig > 0.0 && dist < kInf) {
      const double by_bar = k.c_bar * dist * dist / s2;
      if (by_bar < du) du = by_bar;
    }

    double sq = sig * std::sqrt(du);
    double q1 = q + nu * du + sq * rng.normal();
    if (guard_wall || guard_pos) {
      // The conditioned law puts no mass on crossing the ceiling, and the
      // native scheme must not evaluate coefficients at nonpositive x, so
      // such proposals are redrawn (with a shrinking step if persistent).
      int tries = 0;
      while ((guard_wall && q1 >= s.wall) || (guard_pos && q1 <= 0.0)) {
        if (++tries > 600) {
          throw StepBudgetError(ctx.used, (ctx.u_done + u) / ctx.lambda2,
                                k.to_x(q));
        }
        if (tries % 16 == 0) {
          du *= 0.25;
          sq = sig * std::sqrt(du);
        }
        if (ctx.left == 0) {
          throw StepBudgetError(ctx.used, (ctx.u_done + u) / ctx.lambda2,
                                k.to_x(q));
        }
        --ctx.left;
        ++ctx.used;
        q1 = q + nu * du + sq * rng.normal();
      }
    }

    const bool cross_lo = q1 <= s.lo;
    const bool cross_hi = q1 >= s.hi;
    if (cross_lo || cross_hi) {
      const double th_lo = cross_lo ? (s.lo - q) / (q1 - q) : 2.0;
      const double th_hi = cross_hi ? (s.hi - q) / (q1 - q) : 2.0;
      if (th_hi < th_lo) {
        out.hit_high = true;
        out.u = u + th_hi * du;
        if (s.hi > out.max_q) out.max_q = s.hi;
      } else {
        out.hit_high = false;
        out.u = u + th_lo * du;
      }
      ctx.u_done += out.u;
      return out;
    }

    if (k.bridge && sig > 0.0) {
      const double var = s2 * du;
      if (s.lo > -kInf) {
        const double a = (q - s.lo) * (q1 - s.lo);
        if (a < 14.0 * var && rng.uniform() < std::exp(-2.0 * a / var)) {
          out.hit_high = false;
          out.u = u + 0.5 * du;
          ctx.u_done += out.u;
          return out;
        }
      }
      if (s.hi < kInf) {
        const double a = (s.hi - q) * (s.hi - q1);
        if (a < 14.0 * var && rng.uniform() < std::exp(-2.0 * a / var)) {
          out.hit_high = true;
          out.u = u + 0.5 * du;
          if (s.hi > out.max_q) out.max_q = s.hi;
          ctx.u_done += out.u;
          return out;
        }
      }
    }

    q = q1;
    u += du;
    if (q > out.max_q) out.max_q = q;
  }
}

HitResult until_hit_core(const Kinematics& kin, const SimConfig& cfg,
                         double lambda2, double x0, double low, double high,
                         std::uint64_t seed) {
  if (!(low >= 0.0) || !(low < high) || !std::isfinite(high)) {
    throw std::invalid_argument("until_hit: need 0 <= low < high < infinity");
  }
  if (!(x0 >= low) || !(x0 <= high)) {
    throw std::invalid_argument("until_hit: start lies outside [low, high]");
  }
  if (x0 == low) return {HitSide::Low, 0.0, x0};
  if (x0 == high) return {HitSide::High, 0.0, x0};
  Rng rng(cfg.rng_master_seed, seed);
  BudgetCtx ctx{cfg.step_budget, 0, 0.0, lambda2};
  LegSpec s;
  // x = 0 is inaccessible; in transformed coordinates it already sits at
  // -infinity, natively an endpoint at or below 0 counts as the contact.
  s.lo = (low == 0.0 && kin.transformed) ? -kInf : kin.to_q(low);
  s.hi = kin.to_q(high);
  const LegOut leg = run_leg(kin, kin.to_q(x0), s, rng, ctx);
  double ml = kin.to_x(leg.max_q);
  if (leg.hit_high && ml < high) ml = high;
  return {leg.hit_high ? HitSide::High : HitSide::Low, leg.u / lambda2, ml};
}

}  // namespace

StepBudgetError::StepBudgetError(std::uint64_t steps_taken, double elapsed,
                                 double at_level)
    : std::runtime_error(budget_message(steps_taken, elapsed, at_level)),
      steps(steps_taken),
      time(elapsed),
      level(at_level) {}

struct CycleEngine::Impl {
  DiffusionModel m;
  SimConfig cfg;
  Kinematics kin;
  double lambda2 = 1.0;
  double ax = 0.0, bx = 0.0, zx = 0.0;
  double qa = 0.0, qb = 0.0, qz = 0.0;
  mutable std::once_flag h_once;
  mutable HGuide guide;

  const HGuide& h_guide() const {
    std::call_once(h_once, [this] {
      if (!(zx > bx)) {
        throw std::invalid_argument("conditioned sampling needs beta < z");
      }
      const HTransformModel ht = h_transform(m, ax, zx);
      const int n = 4096;
      guide.q0 = qa;
      guide.wall = qz;
      const double dq = (qz - qa) * (1.0 - 1e-9) / n;
      guide.inv_dq = 1.0 / dq;
      guide.c.resize(n + 1);
      for (int i = 0; i <= n; ++i) {
        const double q = qa + dq * i;
        const double x = kin.to_x(q);
        const double sx = m.sigma(x);
        // u-clock drift addend sigma h'/h (transformed coordinates) or
        // sigma^2 h'/h (native), de-singularized by the (qz - q) factor.
        const double g = (kin.transformed ? sx : sx * sx) * ht.h_ratio(x);
        guide.c[i] = std::log(-g * (qz - q));
      }
    });
    return guide;
  }

  Rng stream(std::uint64_t seed) const { return Rng(cfg.rng_master_seed, seed); }

  BudgetCtx fresh_budget() const {
    return BudgetCtx{cfg.step_budget, 0, 0.0, lambda2};
  }

  CycleRecord run_cycle(std::uint64_t seed, bool conditioned) const {
    if (!(zx > bx)) {
      throw std::invalid_argument("cycle: z must exceed beta");
    }
    Rng rng = stream(seed);
    BudgetCtx ctx = fresh_budget();
    LegSpec up;
    up.hi = qb;
    const LegOut l1 = run_leg(kin, qa, up, rng, ctx);
    double max_q = l1.max_q;
    CycleRecord rec;
    rec.conditioned = conditioned;
    rec.tau = l1.u / lambda2;
    if (conditioned) {
      const HGuide& g = h_guide();
      LegSpec dn;
      dn.lo = qa;
      dn.wall = qz;
      dn.guide = &g;
      const LegOut l2 = run_leg(kin, qb, dn, rng, ctx);
      max_q = std::max(max_q, l2.max_q);
      rec.sigma = (l1.u + l2.u) / lambda2;
      rec.spike = false;
      if (!(max_q < qz)) {
        throw std::logic_error("conditioned cycle touched z");
      }
    } else {
      LegSpec dn;
      dn.lo = qa;
      dn.hi = qz;
      const LegOut l2 = run_leg(kin, qb, dn, rng, ctx);
      max_q = std::max(max_q, l2.max_q);
      rec.spike = l2.hit_high;
      if (l2.hit_high) {
        // z was crossed, not absorbed: finish the cycle from z.
        LegSpec rest;
        rest.lo = qa;
        const LegOut l3 = run_leg(kin, qz, rest, rng, ctx);
        max_q = std::max(max_q, l3.max_q);
        rec.sigma = (l1.u + l2.u + l3.u) / lambda2;
      } else {
        rec.sigma = (l1.u + l2.u) / lambda2;
      }
    }
    rec.max_level = kin.to_x(max_q);
    // The q-space comparison against qz decides the spike; keep the rounded
    // x-space report consistent with it.
    if (rec.spike && rec.max_level < zx) rec.max_level = zx;
    if (!rec.spike && rec.max_level >= zx) {
      rec.max_level = std::nextafter(zx, 0.0);
    }
    return rec;
  }

  double run_downcross(std::uint64_t seed) const {
    if (!(zx > bx)) {
      throw std::invalid_argument("downcross: z must exceed beta");
    }
    Rng rng = stream(seed);
    BudgetCtx ctx = fresh_budget();
    LegSpec dn;
    dn.lo = qa;
    dn.hi = qz;
    for (int attempt = 0; attempt < 200000; ++attempt) {
      const LegOut l = run_leg(kin, qb, dn, rng, ctx);
      if (!l.hit_high) return l.u / lambda2;
    }
    throw std::runtime_error(
        "downcross_rejection: rejection budget exceeded");
  }

  SpikeTrain run_train(double horizon, std::uint64_t seed) const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::invalid_argument("horizon must be positive and finite");
    }
    Rng rng = stream(seed);
    BudgetCtx ctx = fresh_budget();
    const double u_limit = lambda2 * horizon;
    SpikeTrain train;
    train.horizon = horizon;
    double u = 0.0;
    while (u < u_limit) {
      ++train.n_cycles;
      double spike_u = -1.0;
      if (qz <= qb) {
        // Low target: the spike is crossed on the way up.
        LegSpec s1;
        s1.hi = qz;
        const LegOut l1 = run_leg(kin, qa, s1, rng, ctx);
        u += l1.u;
        spike_u = u;
        if (qz < qb) {
          LegSpec s2;
          s2.hi = qb;
          const LegOut l2 = run_leg(kin, qz, s2, rng, ctx);
          u += l2.u;
        }
        LegSpec dn;
        dn.lo = qa;
        const LegOut l3 = run_leg(kin, qb, dn, rng, ctx);
        u += l3.u;
      } else {
        LegSpec s1;
        s1.hi = qb;
        const LegOut l1 = run_leg(kin, qa, s1, rng, ctx);
        u += l1.u;
        LegSpec dn;
        dn.lo = qa;
        dn.hi = qz;
        const LegOut l2 = run_leg(kin, qb, dn, rng, ctx);
        u += l2.u;
        if (l2.hit_high) {
          spike_u = u;
          LegSpec rest;
          rest.lo = qa;
          const LegOut l3 = run_leg(kin, qz, rest, rng, ctx);
          u += l3.u;
        }
      }
      // The final cycle may straddle the horizon; its spike counts exactly
      // when the crossing instant itself lands inside.
      if (spike_u >= 0.0 && spike_u <= u_limit) {
        train.times.push_back(spike_u / lambda2);
      }
    }
    return train;
  }

  double run_hitting_time(double x, std::uint64_t seed) const {
    if (!(x > 0.0) || !(x <= zx)) {
      throw std::invalid_argument("hitting time start must lie in (0, z]");
    }
    if (x == zx) return 0.0;
    Rng rng = stream(seed);
    BudgetCtx ctx = fresh_budget();
    double u = 0.0;
    double q = kin.to_q(x);
    // Up-phases from the floor aim at beta when it sits below z, otherwise
    // at the transformed midpoint; the choice does not affect the law.
    const double qtop = qb < qz ? qb : qa + 0.5 * (qz - qa);
    for (;;) {
      if (q <= qa) {
        LegSpec up;
        up.hi = qtop;
        const LegOut l = run_leg(kin, q, up, rng, ctx);
        u += l.u;
        q = qtop;
      } else {
        LegSpec two;
        two.lo = qa;
        two.hi = qz;
        const LegOut l = run_leg(kin, q, two, rng, ctx);
        u += l.u;
        if (l.hit_high) return u / lambda2;
        q = qa;
      }
    }
  }
};

CycleEngine::CycleEngine(const DiffusionModel& m,
                         const CycleBoundaries& bounds, double z,
                         const SimConfig& cfg)
    : impl_(new Impl) {
  impl_->m = m;
  impl_->cfg = cfg;
  impl_->kin = make_kinematics(m, cfg);
  impl_->lambda2 = m.lambda * m.lambda;
  impl_->ax = bounds.alpha(m.epsilon);
  impl_->bx = bounds.beta(m.epsilon);
  impl_->zx = z;
  if (!(impl_->ax > 0.0) || !(impl_->bx > impl_->ax)) {
    throw std::invalid_argument("boundaries must satisfy 0 < alpha < beta");
  }
  if (!(z > impl_->ax) || !std::isfinite(z)) {
    throw std::invalid_argument("z must be finite and exceed alpha");
  }
  impl_->qa = impl_->kin.to_q(impl_->ax);
  impl_->qb = impl_->kin.to_q(impl_->bx);
  impl_->qz = impl_->kin.to_q(impl_->zx);
}

CycleEngine::~CycleEngine() = default;

HitResult CycleEngine::until_hit(double x0, double low, double high,
                                 std::uint64_t seed) const {
  return until_hit_core(impl_->kin, impl_->cfg, impl_->lambda2, x0, low,
                        high, seed);
}

CycleRecord CycleEngine::cycle(std::uint64_t seed, bool conditioned) const {
  return impl_->run_cycle(seed, conditioned);
}

double CycleEngine::downcross_rejection(std::uint64_t seed) const {
  return impl_->run_downcross(seed);
}

SpikeTrain CycleEngine::spike_process(double horizon,
                                      std::uint64_t seed) const {
  return impl_->run_train(horizon, seed);
}

double CycleEngine::hitting_time_from(double x, std::uint64_t seed) const {
  return impl_->run_hitting_time(x, seed);
}

double CycleEngine::alpha() const { return impl_->ax; }
double CycleEngine::beta() const { return impl_->bx; }
double CycleEngine::z() const { return impl_->zx; }

HitResult simulate_until_hit(const DiffusionModel& m, double x0, double low,
                             double high, const SimConfig& cfg,
                             std::uint64_t seed) {
  const Kinematics kin = make_kinematics(m, cfg);
  return until_hit_core(kin, cfg, m.lambda * m.lambda, x0, low, high, seed);
}

CycleRecord sample_cycle(const DiffusionModel& m,
                         const CycleBoundaries& bounds, double z,
                         const SimConfig& cfg, std::uint64_t seed,
                         bool conditioned) {
  return CycleEngine(m, bounds, z, cfg).cycle(seed, conditioned);
}

double sample_conditioned_downcross_rejection(const DiffusionModel& m,
                                              const CycleBoundaries& bounds,
                                              double z, const SimConfig& cfg,
                                              std::uint64_t seed) {
  return CycleEngine(m, bounds, z, cfg).downcross_rejection(seed);
}

SpikeTrain run_spike_process(const DiffusionModel& m,
                             const CycleBoundaries& bounds, double z,
                             double horizon, const SimConfig& cfg,
                             std::uint64_t seed) {
  return CycleEngine(m, bounds, z, cfg).spike_process(horizon, seed);
}

double sample_hitting_time_from_x(const DiffusionModel& m, double x, double z,
                                  double floor_alpha, const SimConfig& cfg,
                                  std::uint64_t seed) {
  if (!(floor_alpha > 0.0) || !(floor_alpha < z)) {
    throw std::invalid_argument("floor must lie in (0, z)");
  }
  // Cycle legs below the floor reuse the natural window shape.
  const double beta =
      2.0 * floor_alpha < z ? 2.0 * floor_alpha : std::sqrt(floor_alpha * z);
  CycleBoundaries bounds{[floor_alpha](double) { return floor_alpha; },
                         [beta](double) { return beta; }};
  return CycleEngine(m, bounds, z, cfg).hitting_time_from(x, seed);
}

}  // namespace spikesim
