#pragma once

#include <functional>
#include <memory>

#include "spikesim/model.hpp"
#include "spikesim/quadrature.hpp"

namespace spikesim {

// log p_c(x) = integral from c to x of (eps b1 - b2)/sigma^2, the log of the
// scale density normalized to p_c(c) = 1. The scale function is
// s(x) = integral of 1/p_c; hitting probabilities are ratios of s-increments
// and do not depend on c.
struct ScaleObjects {
  double anchor;
  double quadrature_tol;
  std::function<double(double)> log_scale_density;
};

ScaleObjects scale_density_log(const DiffusionModel& m, double anchor,
                               double rel_tol = 1e-10);

// P_x(hit R before r); exact 0/1 at the endpoints; independent of lambda.
double hitting_prob(const DiffusionModel& m, double x, double r, double R);

// Probability that an excursion started at beta(eps) reaches z before
// alpha(eps). log variant for values far below double range.
double spike_prob(const DiffusionModel& m, const CycleBoundaries& bounds,
                  double z);
double spike_prob_log(const DiffusionModel& m, const CycleBoundaries& bounds,
                      double z);

struct Domain {
  double lower;
  double upper;
};

// Boundary treatment of the exit problem on (lower, upper):
//  TwoAbsorbing   both endpoints absorbing (lower > 0 required);
//  UpperAbsorbing absorbing at upper, lower inaccessible or reflecting
//                 (lower = 0 allowed: mass near 0 is cut where the speed
//                 density has fallen 120 nats below its peak);
//  LowerAbsorbing mirror image; upper inaccessible or reflecting, as for the
//                 conditioned down-crossing where h shuts off the top end.
enum class KernelKind { TwoAbsorbing, UpperAbsorbing, LowerAbsorbing };

struct GreenKernel {
  Domain domain;
  KernelKind kind;
  std::function<double(double)> u;      // nondecreasing solution (1 if unused)
  std::function<double(double)> v;      // nonincreasing solution (1 if unused)
  std::function<double(double)> log_u;
  std::function<double(double)> log_v;
  double log_normalizer;                // log K for TwoAbsorbing, else 0
  double g(double x, double y) const;
  double log_g(double x, double y) const;
};

GreenKernel green_kernel(const DiffusionModel& m, Domain domain,
                         KernelKind kind);

// E_start[exit time] and its second moment via the Green kernel and Kac's
// recursion; the lambda^-2 clock factor enters through the speed density.
double expected_exit_time(const DiffusionModel& m, double start, Domain domain,
                          KernelKind kind);
double exit_time_second_moment(const DiffusionModel& m, double start,
                               Domain domain, KernelKind kind);

// Doob transform by h(x) = P_x(hit lower before upper): the law of the
// diffusion conditioned never to reach `upper`.
struct HTransformModel {
  DiffusionModel base;
  double lower;
  double upper;
  std::function<double(double)> h;
  std::function<double(double)> log_h;
  // h'(x)/h(x), always negative on (lower, upper).
  std::function<double(double)> h_ratio;
  std::function<double(double)> log_ph;  // log(p h^2)
  std::function<double(double)> log_rh;  // log_ph - log sigma^2 - 2 log lambda
  std::function<double(double)> drift;   // base drift + lambda^2 sigma^2 h'/h
};

HTransformModel h_transform(const DiffusionModel& m, double lower,
                            double upper);

// Moments of the down-crossing time from `start` to `lower` under the
// conditioned law, via the lower-absorbing Green kernel of the transformed
// generator on (lower, z).
double conditioned_downcross_mean(const DiffusionModel& m, double lower,
                                  double z, double start);
double conditioned_downcross_second_moment(const DiffusionModel& m,
                                           double lower, double z,
                                           double start);

}  // namespace spikesim
