#include "fbmldp/fracops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbmldp/errors.hpp"

namespace fbmldp {

namespace {

void check_alpha(double alpha, bool allow_one, const char* what) {
  const bool ok = allow_one ? (alpha > 0.0 && alpha <= 1.0) : (alpha > 0.0 && alpha < 1.0);
  if (!ok || !std::isfinite(alpha)) {
    throw DomainError(std::string(what) + ": alpha out of range (" + std::to_string(alpha) + ")");
  }
}

// p[m] = (m h)^e, m = 0..n
std::vector<double> lag_powers(std::size_t n, double e) {
  const double h = 1.0 / static_cast<double>(n);
  std::vector<double> p(n + 1);
  p[0] = 0.0;
  for (std::size_t m = 1; m <= n; ++m) p[m] = std::pow(static_cast<double>(m) * h, e);
  return p;
}

double pw(double x, double e) { return std::pow(x, e); }

// Left derivative bracket at x, where cells 0..kc-1 are full and [t_kc, x]
// is the partial cell. ft is f(x).
double left_bracket(std::span<const double> f, std::size_t stride, std::size_t n, double x,
                    std::size_t kc, double ft, double alpha, Interp interp) {
  const double h = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < kc; ++j) {
    const double tj = static_cast<double>(j) * h;
    const double xlo = x - (tj + h);
    const double xhi = x - tj;
    const double fj = f[j * stride];
    if (interp == Interp::step) {
      if (xlo > 0.0) acc += (ft - fj) * (pw(xlo, -alpha) - pw(xhi, -alpha)) / alpha;
      continue;
    }
    const double b = (f[(j + 1) * stride] - fj) / h;
    const double A = ft - fj - b * (x - tj);
    if (xlo > 0.0) acc += A * (pw(xlo, -alpha) - pw(xhi, -alpha)) / alpha;
    acc += b * (pw(xhi, 1.0 - alpha) - (xlo > 0.0 ? pw(xlo, 1.0 - alpha) : 0.0)) / (1.0 - alpha);
  }
  if (interp == Interp::linear && kc < n) {
    const double tk = static_cast<double>(kc) * h;
    const double bk = (f[(kc + 1) * stride] - f[kc * stride]) / h;
    const double d = x - tk;
    if (d > 0.0) acc += bk * pw(d, 1.0 - alpha) / (1.0 - alpha);
  }
  return (ft * pw(x, -alpha) + alpha * acc) / std::tgamma(1.0 - alpha);
}

// Right derivative bracket at x, where [x, t_{kc+1}] is the partial cell and
// cells kc+1..n-1 are full.
double right_bracket(std::span<const double> f, std::size_t stride, std::size_t n, double x,
                     std::size_t kc, double ft, double alpha, Interp interp) {
  const double h = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t j = kc + 1; j < n; ++j) {
    const double tj = static_cast<double>(j) * h;
    const double xlo = tj - x;
    const double xhi = tj + h - x;
    const double fj = f[j * stride];
    if (interp == Interp::step) {
      if (xlo > 0.0) acc += (ft - fj) * (pw(xlo, -alpha) - pw(xhi, -alpha)) / alpha;
      continue;
    }
    const double b = (f[(j + 1) * stride] - fj) / h;
    const double A = ft - fj - b * (x - tj);
    if (xlo > 0.0) acc += A * (pw(xlo, -alpha) - pw(xhi, -alpha)) / alpha;
    acc -= b * (pw(xhi, 1.0 - alpha) - (xlo > 0.0 ? pw(xlo, 1.0 - alpha) : 0.0)) / (1.0 - alpha);
  }
  if (interp == Interp::linear && kc < n) {
    const double bk = (f[(kc + 1) * stride] - f[kc * stride]) / h;
    const double d = static_cast<double>(kc + 1) * h - x;
    if (d > 0.0) acc -= bk * pw(d, 1.0 - alpha) / (1.0 - alpha);
  }
  return (ft * pw(1.0 - x, -alpha) + alpha * acc) / std::tgamma(1.0 - alpha);
}

}  // namespace

GridFn frac_integral(const GridFn& f, double alpha, Side side) {
  check_alpha(alpha, true, "frac_integral");
  const std::size_t n = f.n_steps();
  const std::size_t d = f.dim();
  const auto p = lag_powers(n, alpha);
  const double g = std::tgamma(alpha + 1.0);
  std::vector<double> out((n + 1) * d, 0.0);
  std::vector<double> fm(n);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t j = 0; j < n; ++j) fm[j] = 0.5 * (f(j, c) + f(j + 1, c));
    for (std::size_t k = 0; k <= n; ++k) {
      double s = 0.0;
      if (side == Side::left) {
        for (std::size_t j = 0; j < k; ++j) s += fm[j] * (p[k - j] - p[k - j - 1]);
      } else {
        for (std::size_t j = k; j < n; ++j) s += fm[j] * (p[j + 1 - k] - p[j - k]);
      }
      out[k * d + c] = s / g;
    }
  }
  return GridFn(n, d, std::move(out));
}

WeylResult weyl_derivative(const GridFn& f, double alpha, Side side) {
  check_alpha(alpha, false, "weyl_derivative");
  const std::size_t n = f.n_steps();
  const std::size_t d = f.dim();
  const auto vals = f.values();
  std::vector<double> out((n + 1) * d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    const auto fc = vals.subspan(c);
    if (side == Side::left) {
      for (std::size_t k = 1; k <= n; ++k) {
        out[k * d + c] = left_bracket(fc, d, n, f.time(k), k - 1, f(k, c), alpha, Interp::linear);
      }
      out[c] = out[d + c];
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        out[k * d + c] = right_bracket(fc, d, n, f.time(k), k, f(k, c), alpha, Interp::linear);
      }
      out[n * d + c] = out[(n - 1) * d + c];
    }
  }
  return {GridFn(n, d, std::move(out)), side == Side::left ? std::size_t{0} : n};
}

std::vector<double> weyl_derivative_at(const GridFn& f, double alpha, Side side,
                                       std::span<const double> points, Interp interp) {
  check_alpha(alpha, false, "weyl_derivative_at");
  if (f.dim() != 1) throw DomainError("weyl_derivative_at: scalar function required");
  const std::size_t n = f.n_steps();
  const double h = f.step();
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i];
    if (!(x > 0.0 && x < 1.0)) throw DomainError("weyl_derivative_at: points must lie in (0,1)");
    const auto kc = std::min(static_cast<std::size_t>(x / h), n - 1);
    const double tk = static_cast<double>(kc) * h;
    const double ft = interp == Interp::step ? f(kc) : f(kc) + (f(kc + 1) - f(kc)) * (x - tk) / h;
    out[i] = side == Side::left ? left_bracket(f.values(), 1, n, x, kc, ft, alpha, interp)
                                : right_bracket(f.values(), 1, n, x, kc, ft, alpha, interp);
  }
  return out;
}

GridFn young_rs(const GridFn& f, const GridFn& g) {
  if (f.n_steps() != g.n_steps()) throw DomainError("young_rs: grid mismatch");
  const std::size_t n = g.n_steps();
  const std::size_t gd = g.dim();
  const std::size_t fd = f.dim();
  if (fd != 1 && fd % gd != 0) {
    throw DomainError("young_rs: f dim " + std::to_string(fd) + " incompatible with g dim " + std::to_string(gd));
  }
  const std::size_t rows = fd == 1 ? gd : fd / gd;
  std::vector<double> out((n + 1) * rows, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t r = 0; r < rows; ++r) {
      double inc = 0.0;
      if (fd == 1) {
        inc = f(k) * (g(k + 1, r) - g(k, r));
      } else {
        for (std::size_t c = 0; c < gd; ++c) inc += f(k, r * gd + c) * (g(k + 1, c) - g(k, c));
      }
      out[(k + 1) * rows + r] = out[k * rows + r] + inc;
    }
  }
  return GridFn(n, rows, std::move(out));
}

double regularity_estimate(const GridFn& f) {
  const std::size_t n = f.n_steps();
  const std::size_t d = f.dim();
  const std::size_t max_lag = std::clamp<std::size_t>(n >= 16 ? n / 8 : n / 2, 1, 16);
  std::vector<double> xs, ys;
  for (std::size_t lag = 1; lag <= max_lag; lag *= 2) {
    double v = 0.0;
    for (std::size_t k = 0; k + lag <= n; ++k) {
      for (std::size_t c = 0; c < d; ++c) {
        const double dx = f(k + lag, c) - f(k, c);
        v += dx * dx;
      }
    }
    if (v == 0.0) return 1.0;
    xs.push_back(std::log(static_cast<double>(lag)));
    ys.push_back(std::log(v / static_cast<double>(n + 1 - lag)));
  }
  if (xs.size() < 2) return 1.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return std::clamp(0.5 * sxy / sxx, 0.0, 1.0);
}

YoungFracResult young_frac(const GridFn& f, const GridFn& g, double alpha) {
  check_alpha(alpha, false, "young_frac");
  if (f.dim() != 1 || g.dim() != 1) throw DomainError("young_frac: scalar f and g required");
  if (f.n_steps() != g.n_steps()) throw DomainError("young_frac: grid mismatch");
  const std::size_t n = f.n_steps();
  const double beta = 1.0 - alpha;

  YoungFracResult res;
  res.f_regularity = regularity_estimate(f);
  res.g_regularity = regularity_estimate(g);
  if (res.f_regularity <= alpha || res.g_regularity <= beta) {
    res.regularity_warning = true;
    res.warning = "young_frac: estimated regularity (" + std::to_string(res.f_regularity) + ", " +
                  std::to_string(res.g_regularity) + ") does not exceed (alpha, 1-alpha) = (" +
                  std::to_string(alpha) + ", " + std::to_string(beta) + ")";
  }

  std::vector<double> gb(n + 1);
  for (std::size_t k = 0; k <= n; ++k) gb[k] = g(k) - g(n);
  const GridFn gminus(n, 1, std::move(gb));
  std::vector<double> mids(n);
  for (std::size_t k = 0; k < n; ++k) mids[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
  const auto dg = weyl_derivative_at(gminus, beta, Side::right, mids, Interp::linear);

  // D^alpha of the step interpolant: f(0) t^{-alpha} plus one (t - t_c)^{-alpha}
  // term per jump, integrated exactly over each cell.
  const auto p = lag_powers(n, 1.0 - alpha);
  double tot = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double jump = c == 0 ? f(0) : f(c) - f(c - 1);
    if (jump == 0.0) continue;
    double s = 0.0;
    for (std::size_t m = 0; c + m < n; ++m) s += (p[m + 1] - p[m]) * dg[c + m];
    tot += jump * s;
  }
  res.value = -tot / ((1.0 - alpha) * std::tgamma(1.0 - alpha));
  return res;
}

HolderReport norms(const GridFn& f, double lambda, double alpha, const NumericConfig& cfg) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("norms: lambda must lie in (0,1)");
  check_alpha(alpha, false, "norms");
  const std::size_t n = f.n_steps();
  const std::size_t d = f.dim();
  const double h = f.step();

  auto dist = [&](std::size_t k, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double x = f(k, c) - f(j, c);
      s += x * x;
    }
    return std::sqrt(s);
  };

  HolderReport r;
  r.lambda = lambda;
  r.alpha = alpha;

  std::vector<double> absf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += f(k, c) * f(k, c);
    absf[k] = std::sqrt(s);
    r.sup_norm = std::max(r.sup_norm, absf[k]);
  }

  std::vector<std::size_t> idx;
  const std::size_t stride = n <= cfg.holder_exact_max ? 1 : (n + cfg.holder_exact_max - 1) / cfg.holder_exact_max;
  for (std::size_t k = 0; k <= n; k += stride) idx.push_back(k);
  if (idx.back() != n) idx.push_back(n);

  const auto inv_lam = lag_powers(n, -lambda);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      r.holder_norm = std::max(r.holder_norm, dist(idx[a], idx[b]) * inv_lam[idx[a] - idx[b]]);
    }
  }

  // Cell weights int_cell (t_k - s)^{-alpha-1} ds for lag m = k - j >= 2.
  const auto pa = lag_powers(n, -alpha);
  const double last_cell = std::pow(h, -alpha) / (1.0 - alpha);
  for (std::size_t k : idx) {
    double acc = 0.0;
    if (k >= 1) acc += dist(k, k - 1) * last_cell;
    for (std::size_t j = 0; j + 1 < k; ++j) {
      const std::size_t m = k - j;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double x = f(k, c) - 0.5 * (f(j, c) + f(j + 1, c));
        s += x * x;
      }
      acc += std::sqrt(s) * (pa[m - 1] - pa[m]) / alpha;
    }
    r.w_alpha_norm = std::max(r.w_alpha_norm, absf[k] + acc);
  }
  return r;
}

}  // namespace fbmldp
