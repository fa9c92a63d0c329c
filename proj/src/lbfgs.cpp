#include "fvpinn/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace fvpinn {

void LBFGSConfig::validate() const {
  if (memory < 1) throw std::invalid_argument("L-BFGS memory must be at least 1");
  if (max_iterations < 0) throw std::invalid_argument("L-BFGS iteration count must be >= 0");
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
    throw std::invalid_argument("strong-Wolfe constants need 0 < c1 < c2 < 1");
  if (!(gtol >= 0.0)) throw std::invalid_argument("gradient tolerance must be >= 0");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Minimiser of the cubic through (a, fa, ga) and (b, fb, gb), clamped into
/// the interval with a bisection fallback.
double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

struct LinePoint {
  double alpha;
  double f;
  double g;  // directional derivative
};

class LineSearch {
 public:
  LineSearch(const Objective& f, std::span<const double> x, std::span<const double> d,
             const LBFGSConfig& cfg, int& evals)
      : f_(f), x_(x), d_(d), cfg_(cfg), evals_(evals), xt_(x.size()), gt_(x.size()) {}

  // Returns true on success; the accepted point's x and gradient are in
  // x_out / g_out.
  bool run(double f0, double g0, double alpha, std::vector<double>& x_out, std::vector<double>& g_out,
           double& f_out) {
    LinePoint prev{0.0, f0, g0};
    for (int i = 0; i < cfg_.max_line_search; ++i) {
      const LinePoint cur = eval(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0 + cfg_.c1 * alpha * g0 || (i > 0 && cur.f >= prev.f))
        return zoom(f0, g0, prev, cur, x_out, g_out, f_out);
      if (std::abs(cur.g) <= -cfg_.c2 * g0) return accept(cur, x_out, g_out, f_out);
      if (cur.g >= 0.0) return zoom(f0, g0, cur, prev, x_out, g_out, f_out);
      prev = cur;
      alpha *= 2.0;
    }
    return false;
  }

 private:
  LinePoint eval(double alpha) {
    for (std::size_t i = 0; i < xt_.size(); ++i) xt_[i] = x_[i] + alpha * d_[i];
    ++evals_;
    const double fv = f_(xt_, gt_);
    last_alpha_ = alpha;
    return {alpha, fv, std::isfinite(fv) ? dot(gt_, d_) : std::numeric_limits<double>::quiet_NaN()};
  }

  bool accept(const LinePoint& p, std::vector<double>& x_out, std::vector<double>& g_out,
              double& f_out) {
    if (last_alpha_ != p.alpha) eval(p.alpha);
    x_out = xt_;
    g_out = gt_;
    f_out = p.f;
    return true;
  }

  bool zoom(double f0, double g0, LinePoint lo, LinePoint hi, std::vector<double>& x_out,
            std::vector<double>& g_out, double& f_out) {
    for (int i = 0; i < cfg_.max_line_search; ++i) {
      double a;
      if (std::isfinite(hi.f) && std::isfinite(hi.g))
        a = cubic_step(lo.alpha, lo.f, lo.g, hi.alpha, hi.f, hi.g);
      else
        a = 0.5 * (lo.alpha + hi.alpha);
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      const LinePoint cur = eval(a);
      if (!std::isfinite(cur.f) || cur.f > f0 + cfg_.c1 * a * g0 || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.g) <= -cfg_.c2 * g0) return accept(cur, x_out, g_out, f_out);
        if (cur.g * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    // Fall back to the best sufficient-decrease point seen, if any.
    if (lo.alpha > 0.0 && lo.f < f0) return accept(lo, x_out, g_out, f_out);
    return false;
  }

  const Objective& f_;
  std::span<const double> x_;
  std::span<const double> d_;
  const LBFGSConfig& cfg_;
  int& evals_;
  std::vector<double> xt_, gt_;
  double last_alpha_ = -1.0;
};

}  // namespace

LBFGSResult lbfgs_minimize(std::vector<double> x0, const Objective& f, const LBFGSConfig& cfg,
                           const IterationCallback& on_iteration) {
  cfg.validate();
  const std::size_t n = x0.size();
  LBFGSResult r;
  r.x = std::move(x0);
  std::vector<double> g(n);
  r.f = f(r.x, g);
  r.evaluations = 1;
  if (!std::isfinite(r.f)) throw std::runtime_error("L-BFGS: objective is not finite at the start");
  r.grad_norm = max_norm(g);

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::vector<double> d(n), x_new, g_new;
  std::vector<double> alpha_hist(static_cast<std::size_t>(cfg.memory));

  while (true) {
    if (r.grad_norm <= cfg.gtol) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      break;
    }
    if (r.iterations >= cfg.max_iterations) {
      r.message = "iteration limit reached";
      break;
    }

    // Two-loop recursion: d = -H g.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    const std::size_t k = S.size();
    for (std::size_t j = k; j-- > 0;) {
      const double a = rho[j] * dot(S[j], d);
      alpha_hist[j] = a;
      for (std::size_t i = 0; i < n; ++i) d[i] -= a * Y[j][i];
    }
    if (k > 0) {
      const double gamma = dot(S[k - 1], Y[k - 1]) / dot(Y[k - 1], Y[k - 1]);
      for (double& v : d) v *= gamma;
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double b = rho[j] * dot(Y[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha_hist[j] - b) * S[j][i];
    }

    double gd = dot(g, d);
    if (!(gd < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      gd = dot(g, d);
    }
    const double step0 = k == 0 ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;

    LineSearch ls(f, r.x, d, cfg, r.evaluations);
    double f_new = 0.0;
    if (!ls.run(r.f, gd, step0, x_new, g_new, f_new)) {
      r.line_search_failed = true;
      r.message = "line search failed; returning best point so far";
      break;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - r.x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    r.x.swap(x_new);
    g.swap(g_new);
    r.f = f_new;
    r.grad_norm = max_norm(g);
    ++r.iterations;
    if (sy > 0.0) {
      if (static_cast<int>(S.size()) == cfg.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    if (on_iteration) on_iteration(r.iterations, r.f, r.grad_norm);
  }
  return r;
}

}  // namespace fvpinn
