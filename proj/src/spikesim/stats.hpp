#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "limits.hpp"

namespace spikesim {

struct Interval {
  double lo;
  double hi;
};

// Wilson score interval for a binomial proportion.
Interval binomial_ci(std::int64_t successes, std::int64_t n, double level);

// Right-continuous empirical CDF; also the sup-distance backend of the KS
// tests below.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> samples);

  double operator()(double t) const;  // fraction of samples <= t
  // sup_t |F_n(t) - F(t)| for a continuous CDF F, evaluated exactly at the
  // jump points.
  double sup_distance(const std::function<double(double)>& cdf) const;
  const std::vector<double>& sorted() const { return xs_; }
  std::int64_t size() const { return static_cast<std::int64_t>(xs_.size()); }

 private:
  std::vector<double> xs_;
};

struct KsResult {
  double stat;
  double pvalue;
};

// One-sample KS against Exp(rate), asymptotic p-value with the effective
// sample-size correction.
KsResult ks_exponential(const std::vector<double>& samples, double rate);

// Two-sample KS with the same asymptotic tail.
KsResult ks_two_sample(const std::vector<double>& a,
                       const std::vector<double>& b);

struct MixtureTestReport {
  double t0 = 0.0;
  double atom_fraction_hat = 0.0;  // fraction of samples below t0
  Interval atom_ci{0.0, 0.0};
  double ks_stat = 0.0;    // tail samples, shifted by t0, against Exp(rate)
  double ks_pvalue = 0.0;
  double rate_hat = 0.0;   // reciprocal tail mean, the self-calibrated rate
  std::int64_t n = 0;
  std::int64_t n_tail = 0;
  bool degenerate = false;  // no tail samples at this t0
};

// Tests samples of a hitting time against the atom-plus-exponential limit:
// the mass below each t0 against 1 - prediction.alpha_xz via the Wilson
// interval, and the shifted tail against Exp(rate), which memorylessness
// makes exact for a true mixture. With self_calibrated the tail is tested
// against its own fitted rate instead of the predicted one.
std::vector<MixtureTestReport> mixture_test(
    const std::vector<double>& samples, const LimitPrediction& prediction,
    const std::vector<double>& t0_grid, bool self_calibrated = false);

struct DispersionResult {
  double index;   // sample variance over mean
  double pvalue;  // two-sided chi-square test of the Poisson null
};

DispersionResult poisson_dispersion(const std::vector<std::int64_t>& counts);

}  // namespace spikesim
