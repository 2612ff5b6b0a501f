#include "spikesim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spikesim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 15-point Kronrod abscissae (nonnegative half) and weights, with the
// embedded 7-point Gauss rule on the odd-indexed abscissae.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelEval {
  double log_value;  // log of the Kronrod estimate
  double rel_error;
};

[[nodiscard]] bool bad_sample(double v) {
  return std::isnan(v) || v == kInf;
}

// One GK15 pass on [lo, hi] in log scale. Throws on NaN / +inf samples.
PanelEval gk15_log(const LogFn& log_f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double vals[15];
  double kron[15];
  double gauss[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    vals[2 * j] = log_f(c - dx);
    vals[2 * j + 1] = log_f(c + dx);
  }
  vals[14] = log_f(c);
  for (int i = 0; i < 15; ++i) {
    if (bad_sample(vals[i])) {
      throw QuadratureError("integrand sample is NaN or +inf", -kInf, kInf);
    }
  }
  for (int j = 0; j < 7; ++j) {
    const double lw = std::log(kWgk[j]);
    kron[2 * j] = lw + vals[2 * j];
    kron[2 * j + 1] = lw + vals[2 * j + 1];
  }
  kron[14] = std::log(kWgk[7]) + vals[14];
  int g = 0;
  for (int j = 1; j < 7; j += 2) {
    const double lw = std::log(kWg[j / 2]);
    gauss[g++] = lw + vals[2 * j];
    gauss[g++] = lw + vals[2 * j + 1];
  }
  gauss[g++] = std::log(kWg[3]) + vals[14];
  const double log_k = std::log(h) + log_sum_exp(kron, 15);
  const double log_g = std::log(h) + log_sum_exp(gauss, 7);
  double rel;
  if (log_k == -kInf) {
    rel = 0.0;  // integrand identically zero on the panel as sampled
  } else {
    rel = std::max(std::abs(std::expm1(log_g - log_k)), 1e-15);
  }
  return {log_k, rel};
}

struct Panel {
  double lo, hi;
  double log_value;
  double rel_error;
};

double panels_log_total(const std::vector<Panel>& panels) {
  std::vector<double> logs(panels.size());
  for (size_t i = 0; i < panels.size(); ++i) logs[i] = panels[i].log_value;
  return log_sum_exp(logs.data(), static_cast<int>(logs.size()));
}

double panels_log_error(const std::vector<Panel>& panels) {
  std::vector<double> logs(panels.size());
  for (size_t i = 0; i < panels.size(); ++i) {
    logs[i] = panels[i].log_value == -kInf
                  ? -kInf
                  : panels[i].log_value + std::log(panels[i].rel_error);
  }
  return log_sum_exp(logs.data(), static_cast<int>(logs.size()));
}

std::vector<double> initial_edges(double a, double b,
                                  const std::vector<double>& hints) {
  std::vector<double> cuts;
  for (double hgt : hints) {
    if (hgt > a && hgt < b) cuts.push_back(hgt);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> edges;
  edges.push_back(a);
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(b);
  // Bisect every initial interval a couple of times so that a narrow peak
  // flagged by a hint is straddled by small panels from the start.
  for (int round = 0; round < 2; ++round) {
    std::vector<double> next;
    next.reserve(edges.size() * 2);
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
      next.push_back(edges[i]);
      next.push_back(0.5 * (edges[i] + edges[i + 1]));
    }
    next.push_back(edges.back());
    edges.swap(next);
  }
  return edges;
}

// Shared adaptive driver; returns the final panel list sorted by left edge.
std::vector<Panel> adapt_log(const LogFn& log_f, double a, double b,
                             const QuadOptions& opt_in, QuadResult* out) {
  QuadOptions opt = opt_in;
  if (opt.scan_points > 1) {
    const int n = opt.scan_points;
    std::vector<double> lv(n);
    for (int i = 0; i < n; ++i) {
      const double x = a + (b - a) * (i + 1.0) / (n + 1.0);
      const double v = log_f(x);
      lv[i] = std::isnan(v) ? -kInf : v;
    }
    for (int i = 0; i < n; ++i) {
      const double left = i == 0 ? -kInf : lv[i - 1];
      const double right = i == n - 1 ? -kInf : lv[i + 1];
      if (lv[i] > left && lv[i] >= right && lv[i] != -kInf) {
        opt.hints.push_back(a + (b - a) * (i + 1.0) / (n + 1.0));
      }
    }
  }
  std::vector<Panel> panels;
  for (const double edge : initial_edges(a, b, opt.hints)) {
    if (!panels.empty()) panels.back().hi = edge;
    if (edge < b) panels.push_back({edge, b, 0, 0});
  }
  for (Panel& p : panels) {
    const PanelEval e = gk15_log(log_f, p.lo, p.hi);
    p.log_value = e.log_value;
    p.rel_error = e.rel_error;
  }
  bool converged = true;
  while (true) {
    const double log_total = panels_log_total(panels);
    const double log_err = panels_log_error(panels);
    if (log_total == -kInf) break;  // zero integral
    if (std::exp(log_err - log_total) <= opt.rel_tol) break;
    if (static_cast<int>(panels.size()) >= opt.max_segments) {
      converged = false;
      break;
    }
    // Split the panel with the largest absolute error contribution;
    // ties resolved toward the smaller left edge for determinism.
    size_t worst = 0;
    double worst_key = -kInf;
    for (size_t i = 0; i < panels.size(); ++i) {
      const double key = panels[i].log_value == -kInf
                             ? -kInf
                             : panels[i].log_value + std::log(panels[i].rel_error);
      if (key > worst_key) {
        worst_key = key;
        worst = i;
      }
    }
    if (worst_key == -kInf) break;  // nothing refinable
    const Panel p = panels[worst];
    const double mid = 0.5 * (p.lo + p.hi);
    if (mid <= p.lo || mid >= p.hi) {
      converged = false;  // panel narrower than double spacing
      break;
    }
    const PanelEval left = gk15_log(log_f, p.lo, mid);
    const PanelEval right = gk15_log(log_f, mid, p.hi);
    panels[worst] = {p.lo, mid, left.log_value, left.rel_error};
    panels.insert(panels.begin() + worst + 1,
                  {mid, p.hi, right.log_value, right.rel_error});
  }
  const double log_total = panels_log_total(panels);
  const double log_err = panels_log_error(panels);
  out->log_value = log_total;
  out->rel_error =
      log_total == -kInf ? 0.0 : std::exp(log_err - log_total);
  out->segments = static_cast<int>(panels.size());
  out->converged = converged;
  return panels;
}

}  // namespace

double log_sum_exp(const double* logs, int n) {
  double m = -kInf;
  for (int i = 0; i < n; ++i) m = std::max(m, logs[i]);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(logs[i] - m);
  return m + std::log(s);
}

QuadResult integrate_log(const LogFn& log_f, double a, double b,
                         const QuadOptions& opt) {
  if (!(a <= b)) throw std::invalid_argument("integrate_log: a > b");
  if (a == b) return {-kInf, 0.0, 0, true};
  QuadResult res;
  adapt_log(log_f, a, b, opt, &res);
  return res;
}

QuadResult integrate_log_upper_infinite(const LogFn& log_f, double a,
                                        const QuadOptions& opt) {
  if (!(a > 0)) {
    throw std::invalid_argument(
        "integrate_log_upper_infinite: lower limit must be positive");
  }
  QuadOptions sub = opt;
  sub.hints.clear();
  for (double hgt : opt.hints) {
    if (hgt > a) sub.hints.push_back(1.0 / hgt);
  }
  const LogFn g = [&log_f](double u) { return log_f(1.0 / u) - 2.0 * std::log(u); };
  return integrate_log(g, 0.0, 1.0 / a, sub);
}

double lower_truncation_point(const LogFn& log_f, double hi,
                              double drop_nats) {
  if (!(hi > 0.0) || !(drop_nats > 0.0)) {
    throw std::invalid_argument("lower_truncation_point: bad arguments");
  }
  const int n = 600;
  std::vector<double> xs(n), lv(n);
  const double lo = hi * 1e-14;
  for (int i = 0; i < n; ++i) {
    xs[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    lv[i] = log_f(xs[i]);
  }
  int peak = 0;
  for (int i = 1; i < n; ++i) {
    if (lv[i] > lv[peak]) peak = i;
  }
  for (int i = peak; i >= 0; --i) {
    if (lv[i] < lv[peak] - drop_nats) return xs[i];
  }
  return xs[0];
}

SignedQuadResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadOptions& opt) {
  if (!(a <= b)) throw std::invalid_argument("integrate: a > b");
  if (a == b) return {0.0, 0.0, 0, true};

  struct SPanel {
    double lo, hi, value, resabs, abs_error;
  };
  const auto eval = [&f](double lo, double hi) -> SPanel {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    double vals[15];
    for (int j = 0; j < 7; ++j) {
      vals[2 * j] = f(c - h * kXgk[j]);
      vals[2 * j + 1] = f(c + h * kXgk[j]);
    }
    vals[14] = f(c);
    double ik = 0, ig = 0, resabs = 0;
    for (int j = 0; j < 7; ++j) {
      ik += kWgk[j] * (vals[2 * j] + vals[2 * j + 1]);
      resabs += kWgk[j] * (std::abs(vals[2 * j]) + std::abs(vals[2 * j + 1]));
    }
    ik += kWgk[7] * vals[14];
    resabs += kWgk[7] * std::abs(vals[14]);
    for (int j = 1; j < 7; j += 2) {
      ig += kWg[j / 2] * (vals[2 * j] + vals[2 * j + 1]);
    }
    ig += kWg[3] * vals[14];
    if (std::isnan(ik)) {
      throw QuadratureError("integrand sample is NaN", 0.0, kInf);
    }
    return {lo, hi, h * ik, h * resabs, h * std::abs(ik - ig)};
  };

  std::vector<SPanel> panels;
  for (const double edge : initial_edges(a, b, opt.hints)) {
    if (!panels.empty()) panels.back().hi = edge;
    if (edge < b) panels.push_back({edge, b, 0, 0, 0});
  }
  for (SPanel& p : panels) p = eval(p.lo, p.hi);

  bool converged = true;
  double total = 0, err = 0;
  while (true) {
    total = 0;
    err = 0;
    double resabs = 0;
    for (const SPanel& p : panels) {
      total += p.value;
      err += p.abs_error;
      resabs += p.resabs;
    }
    const double scale = std::max(resabs, 1e-300);
    if (err <= opt.rel_tol * scale) break;
    if (static_cast<int>(panels.size()) >= opt.max_segments) {
      converged = false;
      break;
    }
    size_t worst = 0;
    for (size_t i = 1; i < panels.size(); ++i) {
      if (panels[i].abs_error > panels[worst].abs_error) worst = i;
    }
    const SPanel p = panels[worst];
    const double mid = 0.5 * (p.lo + p.hi);
    if (mid <= p.lo || mid >= p.hi) {
      converged = false;
      break;
    }
    panels[worst] = eval(p.lo, mid);
    panels.insert(panels.begin() + worst + 1, eval(mid, p.hi));
  }
  return {total, err, static_cast<int>(panels.size()), converged};
}

CumulativeLogIntegral::CumulativeLogIntegral(LogFn log_f, double a, double b,
                                             const QuadOptions& opt)
    : log_f_(std::move(log_f)), a_(a), b_(b) {
  if (!(a < b)) {
    throw std::invalid_argument("CumulativeLogIntegral: need a < b");
  }
  QuadResult res;
  const std::vector<Panel> panels = adapt_log(log_f_, a, b, opt, &res);
  if (!res.converged) {
    throw QuadratureError("cumulative table did not converge", res.log_value,
                          res.rel_error);
  }
  log_total_ = res.log_value;
  rel_error_ = res.rel_error;
  edges_.reserve(panels.size() + 1);
  log_panel_.reserve(panels.size());
  edges_.push_back(a);
  for (const Panel& p : panels) {
    edges_.push_back(p.hi);
    log_panel_.push_back(p.log_value);
  }
}

double CumulativeLogIntegral::panel_log(int i, double x, double y) const {
  if (x >= y) return -kInf;
  if (x <= edges_[i] && y >= edges_[i + 1]) return log_panel_[i];
  return gk15_log(log_f_, x, y).log_value;
}

double CumulativeLogIntegral::log_range(double x, double y) const {
  const double slack = 1e-9 * (b_ - a_) + 1e-12 * (std::abs(a_) + std::abs(b_));
  if (x < a_ - slack || y > b_ + slack || std::isnan(x) || std::isnan(y)) {
    throw std::invalid_argument("log_range: query outside table domain");
  }
  x = std::clamp(x, a_, b_);
  y = std::clamp(y, a_, b_);
  if (x >= y) return -kInf;
  // Panel index containing a coordinate: edges_[i] <= t < edges_[i+1].
  const auto locate = [this](double t) -> int {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
    int i = static_cast<int>(it - edges_.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(log_panel_.size()) - 1);
  };
  const int ix = locate(x);
  const int iy = locate(y);
  if (ix == iy) {
    return panel_log(ix, std::max(x, edges_[ix]),
                     std::min(y, edges_[ix + 1]));
  }
  std::vector<double> parts;
  parts.reserve(iy - ix + 1);
  parts.push_back(panel_log(ix, x, edges_[ix + 1]));
  for (int i = ix + 1; i < iy; ++i) parts.push_back(log_panel_[i]);
  parts.push_back(panel_log(iy, edges_[iy], y));
  return log_sum_exp(parts.data(), static_cast<int>(parts.size()));
}

CumulativeIntegral::CumulativeIntegral(std::function<double(double)> f,
                                       double a, double b,
                                       const QuadOptions& opt)
    : f_(std::move(f)), a_(a), b_(b) {
  if (!(a < b)) throw std::invalid_argument("CumulativeIntegral: need a < b");
  // Reuse the signed adaptive driver panel by panel: run it once to find a
  // good partition, then store prefix sums over that partition.
  QuadOptions run = opt;
  const SignedQuadResult whole = integrate(f_, a, b, run);
  if (!whole.converged) {
    throw QuadratureError("cumulative signed table did not converge",
                          whole.value, whole.abs_error);
  }
  // A uniform refinement of the hint-seeded grid is enough here: the signed
  // tables are only used for smooth moderate-magnitude integrands. Panel
  // count scales with what the adaptive pass needed.
  const int n = std::max(64, 2 * whole.segments);
  edges_.resize(n + 1);
  std::vector<double> cuts;
  for (double hgt : opt.hints) {
    if (hgt > a && hgt < b) cuts.push_back(hgt);
  }
  std::sort(cuts.begin(), cuts.end());
  // Geometric-ish spacing toward a when the lower edge is much smaller than
  // the upper: scale logs steepen toward 0.
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    if (a > 0 && b / a > 100.0) {
      edges_[i] = a * std::pow(b / a, t);
    } else {
      edges_[i] = a + (b - a) * t;
    }
  }
  for (double hgt : cuts) {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), hgt);
    edges_.insert(it, hgt);
  }
  prefix_.assign(edges_.size(), 0.0);
  for (size_t i = 0; i + 1 < edges_.size(); ++i) {
    QuadOptions po;
    po.rel_tol = opt.rel_tol;
    po.max_segments = 200;
    const SignedQuadResult r = integrate(f_, edges_[i], edges_[i + 1], po);
    if (!r.converged) {
      throw QuadratureError("cumulative signed panel did not converge",
                            r.value, r.abs_error);
    }
    prefix_[i + 1] = prefix_[i] + r.value;
  }
}

double CumulativeIntegral::panel_value(double x, double y) const {
  if (x >= y) return 0.0;
  QuadOptions po;
  po.rel_tol = 1e-12;
  po.max_segments = 200;
  return integrate(f_, x, y, po).value;
}

double CumulativeIntegral::range(double x, double y) const {
  const double slack = 1e-9 * (b_ - a_) + 1e-12 * (std::abs(a_) + std::abs(b_));
  if (x < a_ - slack || y > b_ + slack || std::isnan(x) || std::isnan(y)) {
    throw std::invalid_argument("range: query outside table domain");
  }
  x = std::clamp(x, a_, b_);
  y = std::clamp(y, a_, b_);
  if (x >= y) return 0.0;
  const auto locate = [this](double t) -> int {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
    int i = static_cast<int>(it - edges_.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(edges_.size()) - 2);
  };
  const int ix = locate(x);
  const int iy = locate(y);
  if (ix == iy) return panel_value(x, y);
  double s = panel_value(x, edges_[ix + 1]);
  s += prefix_[iy] - prefix_[ix + 1];
  s += panel_value(edges_[iy], y);
  return s;
}

}  // namespace spikesim
