#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikesim {

// Callable returning log f(x) for a nonnegative integrand f. Returning
// -infinity means f(x) == 0; NaN or +infinity are integrand errors.
using LogFn = std::function<double(double)>;

struct QuadOptions {
  double rel_tol = 1e-10;
  int max_segments = 6000;
  // Interior abscissae worth placing panel edges at (peaks, near-singular
  // spots). Values outside the integration range are ignored.
  std::vector<double> hints;
  // When positive, sample the integrand at this many equispaced interior
  // points first and add local maxima to the hints. Guards one-shot calls
  // against peaks narrower than the initial panels; off by default because
  // inner integrals of nested quadratures are monotone and pay per call.
  int scan_points = 0;
};

struct QuadResult {
  double log_value;  // natural log of the integral; -inf for a zero integral
  double rel_error;  // achieved relative error estimate
  int segments = 0;
  bool converged = true;
};

// Thrown when an integrand sample is NaN/+inf or a tolerance cannot be
// reached within the segment budget. Carries the best available estimate.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double log_value, double rel_error)
      : std::runtime_error(what), log_value(log_value), rel_error(rel_error) {}
  double log_value;
  double rel_error;
};

double log_sum_exp(const double* logs, int n);

// Adaptive Gauss-Kronrod 15(7) for integral of exp(log_f) over finite [a, b],
// accumulated in log scale so integrands spanning hundreds of nats are fine.
QuadResult integrate_log(const LogFn& log_f, double a, double b,
                         const QuadOptions& opt = {});

// Same integral over [a, +infinity), a > 0, via the u = 1/x substitution.
QuadResult integrate_log_upper_infinite(const LogFn& log_f, double a,
                                        const QuadOptions& opt = {});

// Geometric scan of (hi * 1e-14, hi) for the peak of log_f, returning the
// point below the peak where log_f has dropped by drop_nats. Used to clip
// integrals whose lower limit is an inaccessible boundary at 0; the mass cut
// off is exp(-drop_nats) of the peak panel and far below every tolerance in
// use here.
double lower_truncation_point(const LogFn& log_f, double hi,
                              double drop_nats = 120.0);

struct SignedQuadResult {
  double value;
  double abs_error;
  int segments = 0;
  bool converged = true;
};

// Adaptive GK15 for a signed smooth integrand in linear scale (used for the
// log of the scale density of generic coefficient models, coordinate maps,
// and other moderate-magnitude integrals).
SignedQuadResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadOptions& opt = {});

// One adaptive pass over [a, b] for a positive integrand, then cheap range
// queries log of integral over [x, y]. Fully covered panels are summed with
// log-sum-exp; the at most two partial panels get a fresh single GK15 pass.
// All contributions are positive, so range queries never cancel.
class CumulativeLogIntegral {
 public:
  CumulativeLogIntegral(LogFn log_f, double a, double b,
                        const QuadOptions& opt = {});

  // Requires a <= x <= y <= b up to a small clamping slack.
  double log_range(double x, double y) const;
  double log_total() const { return log_total_; }
  double lower() const { return a_; }
  double upper() const { return b_; }
  int panels() const { return static_cast<int>(log_panel_.size()); }
  double rel_error() const { return rel_error_; }

 private:
  double panel_log(int i, double x, double y) const;

  LogFn log_f_;
  double a_, b_;
  double log_total_;
  double rel_error_;
  std::vector<double> edges_;      // size panels + 1
  std::vector<double> log_panel_;  // log integral per panel
};

// Signed counterpart of CumulativeLogIntegral for smooth integrands of
// moderate magnitude (scale-density logs of generic models).
class CumulativeIntegral {
 public:
  CumulativeIntegral(std::function<double(double)> f, double a, double b,
                     const QuadOptions& opt = {});

  double range(double x, double y) const;  // integral over [x, y], x <= y
  double lower() const { return a_; }
  double upper() const { return b_; }

 private:
  double panel_value(double x, double y) const;

  std::function<double(double)> f_;
  double a_, b_;
  std::vector<double> edges_;
  std::vector<double> prefix_;  // prefix_[i] = integral over [a, edges_[i]]
};

}  // namespace spikesim
