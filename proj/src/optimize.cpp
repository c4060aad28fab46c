#include "fbmldp/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace fbmldp {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double rel_step,
                                std::size_t& evaluations) {
  std::vector<double> g(x.size());
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  evaluations += 2 * x.size();
  return g;
}

BfgsResult bfgs_minimize(const Objective& f, std::vector<double> x0, const BfgsOptions& opts) {
  const std::size_t n = x0.size();
  BfgsResult r;
  r.x = std::move(x0);
  r.f = f(r.x);
  r.evaluations = 1;
  if (n == 0) {
    r.converged = true;
    r.message = "empty problem";
    return r;
  }

  std::vector<double> hinv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
  std::vector<double> g = fd_gradient(f, r.x, opts.fd_rel_step, r.evaluations);
  std::vector<double> p(n), xn(n), s(n), y(n), hy(n);

  for (r.iterations = 0; r.iterations < opts.max_iter; ++r.iterations) {
    r.grad_norm = std::sqrt(dot(g, g));
    if (r.grad_norm <= opts.grad_tol) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v -= hinv[i * n + j] * g[j];
      p[i] = v;
    }
    double slope = dot(g, p);
    if (slope >= 0.0) {
      // not a descent direction: restart from steepest descent
      std::fill(hinv.begin(), hinv.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        hinv[i * n + i] = 1.0;
        p[i] = -g[i];
      }
      slope = -dot(g, g);
    }

    double step = 1.0;
    double fn = r.f;
    bool accepted = false;
    for (std::size_t b = 0; b < opts.max_backtracks; ++b) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = r.x[i] + step * p[i];
      fn = f(xn);
      ++r.evaluations;
      if (std::isfinite(fn) && fn <= r.f + opts.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      r.converged = r.grad_norm <= 1e3 * opts.grad_tol;
      r.message = "line search failed";
      return r;
    }

    const double decrease = r.f - fn;
    const std::vector<double> gn = fd_gradient(f, xn, opts.fd_rel_step, r.evaluations);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - r.x[i];
      y[i] = gn[i] - g[i];
    }
    r.x = xn;
    r.f = fn;
    g = gn;

    const double sy = dot(s, y);
    if (sy > 0.0) {
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j) v += hinv[i * n + j] * y[j];
        hy[i] = v;
      }
      const double yhy = dot(y, hy);
      // H+ = H - rho (H y s' + s y' H) + (rho^2 y'Hy + rho) s s'
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
      }
    }
    if (decrease <= opts.f_tol * std::max(1.0, std::abs(r.f))) {
      r.grad_norm = std::sqrt(dot(g, g));
      r.converged = true;
      r.message = "relative decrease below tolerance";
      return r;
    }
  }
  r.grad_norm = std::sqrt(dot(g, g));
  r.message = "iteration limit reached";
  return r;
}

}  // namespace fbmldp
