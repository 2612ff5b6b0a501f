#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace spikesim {

namespace {

// Survival function of the Kolmogorov distribution, both theta-function
// series with the usual crossover for accuracy at small arguments.
double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    const double pi = 3.14159265358979323846;
    const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
    const double sum = y + std::pow(y, 9.0) + std::pow(y, 25.0);
    return 1.0 - std::sqrt(2.0 * pi) / lambda * sum;
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::max(0.0, 2.0 * sum);
}

double ks_pvalue_from(double stat, double n_eff) {
  const double r = std::sqrt(n_eff);
  return kolmogorov_survival((r + 0.12 + 0.11 / r) * stat);
}

}  // namespace

Interval binomial_ci(std::int64_t successes, std::int64_t n, double level) {
  if (n < 1 || successes < 0 || successes > n) {
    throw std::invalid_argument("binomial_ci: need 0 <= successes <= n");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::invalid_argument("binomial_ci: level must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> norm;
  const double z = boost::math::quantile(norm, 0.5 * (1.0 + level));
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + 0.5 * z2 / nn) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + 0.25 * z2 / (nn * nn)) / denom;
  // At the extremes the score bound is exactly the observed proportion.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

Ecdf::Ecdf(std::vector<double> samples) : xs_(std::move(samples)) {
  if (xs_.empty()) throw std::invalid_argument("ecdf: empty sample");
  std::sort(xs_.begin(), xs_.end());
}

double Ecdf::operator()(double t) const {
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), t);
  return static_cast<double>(it - xs_.begin()) /
         static_cast<double>(xs_.size());
}

double Ecdf::sup_distance(const std::function<double(double)>& cdf) const {
  const double n = static_cast<double>(xs_.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    const double f = cdf(xs_[i]);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max(d, std::max(above, below));
  }
  return d;
}

KsResult ks_exponential(const std::vector<double>& samples, double rate) {
  if (samples.empty()) {
    throw std::invalid_argument("ks_exponential: empty sample");
  }
  if (!(rate > 0.0)) {
    throw std::invalid_argument("ks_exponential: rate must be positive");
  }
  for (double s : samples) {
    if (!(s >= 0.0)) {
      throw std::invalid_argument("ks_exponential: samples must be >= 0");
    }
  }
  const Ecdf f(samples);
  const double stat =
      f.sup_distance([rate](double t) { return -std::expm1(-rate * t); });
  return {stat, ks_pvalue_from(stat, static_cast<double>(samples.size()))};
}

KsResult ks_two_sample(const std::vector<double>& a,
                       const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_two_sample: empty sample");
  }
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double t = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= t) ++i;
    while (j < sb.size() && sb[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return {d, ks_pvalue_from(d, na * nb / (na + nb))};
}

std::vector<MixtureTestReport> mixture_test(
    const std::vector<double>& samples, const LimitPrediction& prediction,
    const std::vector<double>& t0_grid, bool self_calibrated) {
  if (samples.empty()) {
    throw std::invalid_argument("mixture_test: empty sample");
  }
  for (double s : samples) {
    if (!(s >= 0.0)) {
      throw std::invalid_argument("mixture_test: samples must be >= 0");
    }
  }
  std::vector<MixtureTestReport> out;
  out.reserve(t0_grid.size());
  for (double t0 : t0_grid) {
    if (!(t0 > 0.0)) {
      throw std::invalid_argument("mixture_test: t0 must be positive");
    }
    MixtureTestReport rep;
    rep.t0 = t0;
    rep.n = static_cast<std::int64_t>(samples.size());
    std::vector<double> tail;
    std::int64_t below = 0;
    for (double s : samples) {
      if (s < t0) {
        ++below;
      } else {
        tail.push_back(s - t0);
      }
    }
    rep.atom_fraction_hat = static_cast<double>(below) /
                            static_cast<double>(samples.size());
    rep.atom_ci = binomial_ci(below, rep.n, 0.95);
    rep.n_tail = static_cast<std::int64_t>(tail.size());
    if (tail.empty()) {
      rep.degenerate = true;
      rep.ks_stat = 1.0;
      rep.ks_pvalue = 0.0;
      rep.rate_hat = std::numeric_limits<double>::quiet_NaN();
      out.push_back(rep);
      continue;
    }
    const double mean =
        std::accumulate(tail.begin(), tail.end(), 0.0) / tail.size();
    rep.rate_hat = mean > 0.0 ? 1.0 / mean
                              : std::numeric_limits<double>::infinity();
    const double rate = self_calibrated ? rep.rate_hat : prediction.rate;
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      rep.degenerate = true;
      rep.ks_stat = 1.0;
      rep.ks_pvalue = 0.0;
    } else {
      const KsResult ks = ks_exponential(tail, rate);
      rep.ks_stat = ks.stat;
      rep.ks_pvalue = ks.pvalue;
    }
    out.push_back(rep);
  }
  return out;
}

DispersionResult poisson_dispersion(const std::vector<std::int64_t>& counts) {
  if (counts.size() < 2) {
    throw std::invalid_argument("poisson_dispersion: need at least 2 counts");
  }
  const double n = static_cast<double>(counts.size());
  double mean = 0.0;
  for (auto c : counts) mean += static_cast<double>(c);
  mean /= n;
  if (!(mean > 0.0)) {
    throw std::invalid_argument("poisson_dispersion: zero mean");
  }
  double ss = 0.0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - mean;
    ss += d * d;
  }
  const double var = ss / (n - 1.0);
  const double index = var / mean;
  // Conditional on the total, (n-1) * index is chi-square with n-1 degrees
  // of freedom under the Poisson null; two-sided p-value.
  const boost::math::chi_squared_distribution<double> chi(n - 1.0);
  const double x = (n - 1.0) * index;
  const double lower = boost::math::cdf(chi, x);
  const double upper = boost::math::cdf(boost::math::complement(chi, x));
  return {index, std::min(1.0, 2.0 * std::min(lower, upper))};
}

}  // namespace spikesim
