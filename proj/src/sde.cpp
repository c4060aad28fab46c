#include "fbmldp/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "fbmldp/errors.hpp"
#include "fbmldp/rng.hpp"

namespace fbmldp {

namespace {

double param(const std::map<std::string, double>& given, const std::string& key, double fallback) {
  const auto it = given.find(key);
  return it == given.end() ? fallback : it->second;
}

void check_params(const std::string& name, const std::map<std::string, double>& given,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : given) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end()) {
      throw DomainError("coefficients '" + name + "': unknown parameter '" + k + "'");
    }
    if (!std::isfinite(v)) throw DomainError("coefficients '" + name + "': parameter '" + k + "' is not finite");
  }
}

void require_square(const std::string& name, std::size_t m, std::size_t d) {
  if (m != d) throw DomainError("coefficients '" + name + "' require m == d");
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void check_driver(const GridFn& driver, const CoefficientSet& coeffs, std::size_t x0_size) {
  if (driver.dim() != coeffs.d) {
    throw DomainError("solve_young: driver dim " + std::to_string(driver.dim()) + " != coefficient d " +
                      std::to_string(coeffs.d));
  }
  if (x0_size != coeffs.m) {
    throw DomainError("solve_young: x0 size " + std::to_string(x0_size) + " != coefficient m " +
                      std::to_string(coeffs.m));
  }
}

// Euler loop; `increment(k, c)` is the driver increment on cell k.
template <class Inc>
GridFn euler(std::span<const double> x0, const CoefficientSet& coeffs, std::size_t n, Inc increment,
             const NumericConfig& cfg) {
  const std::size_t m = coeffs.m;
  const std::size_t d = coeffs.d;
  const double h = 1.0 / static_cast<double>(n);
  std::vector<double> x((n + 1) * m);
  std::copy(x0.begin(), x0.end(), x.begin());
  std::vector<double> b(m), sig(m * d), dg(d);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    const std::span<const double> xk(x.data() + k * m, m);
    coeffs.drift(t, xk, b);
    coeffs.diffusion(t, xk, sig);
    for (std::size_t c = 0; c < d; ++c) dg[c] = increment(k, c);
    for (std::size_t i = 0; i < m; ++i) {
      double v = xk[i] + b[i] * h;
      for (std::size_t c = 0; c < d; ++c) v += sig[i * d + c] * dg[c];
      if (!std::isfinite(v) || std::abs(v) > cfg.overflow_bound) {
        throw NumericError("solve_young: state left the bound " + fmt17(cfg.overflow_bound), k + 1);
      }
      x[(k + 1) * m + i] = v;
    }
  }
  return GridFn(n, m, std::move(x));
}

}  // namespace

CoefficientSet make_coefficients(const std::string& name_in, std::size_t m, std::size_t d,
                                 const std::map<std::string, double>& p) {
  if (m == 0 || d == 0) throw DomainError("coefficients: m and d must be positive");
  const std::string name = name_in == "constant" ? "additive" : name_in;
  CoefficientSet cs;
  cs.name = name;
  cs.m = m;
  cs.d = d;
  cs.params = p;

  auto diag_const = [m, d](double s) {
    return [m, d, s](double, std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < std::min(m, d); ++i) out[i * d + i] = s;
    };
  };

  if (name == "zero") {
    check_params(name, p, {});
    cs.drift = [](double, std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    cs.diffusion = diag_const(0.0);
    cs.meta = {0.0, 0.0, 1.0, 1.0, "b = 0, sigma = 0"};
  } else if (name == "additive") {
    check_params(name, p, {"drift", "sigma"});
    const double drift = param(p, "drift", 0.0), s = param(p, "sigma", 1.0);
    cs.drift = [drift](double, std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), drift); };
    cs.diffusion = diag_const(s);
    cs.meta = {0.0, 0.0, 1.0, 1.0, "constant coefficients"};
  } else if (name == "ou") {
    check_params(name, p, {"theta", "sigma"});
    const double theta = param(p, "theta", 1.0), s = param(p, "sigma", 1.0);
    cs.drift = [theta](double, std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = -theta * x[i];
    };
    cs.diffusion = diag_const(s);
    cs.meta = {std::abs(theta), 0.0, 1.0, 1.0, "linear drift, constant diffusion"};
  } else if (name == "linear_noise") {
    check_params(name, p, {"sigma"});
    require_square(name, m, d);
    const double s = param(p, "sigma", 1.0);
    cs.drift = [](double, std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    cs.diffusion = [d, s](double, std::span<const double> x, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) out[i * d + i] = s * x[i];
    };
    cs.meta = {0.0, std::abs(s), 1.0, 1.0, "sigma linear in x: Lipschitz, unbounded"};
  } else if (name == "affine") {
    check_params(name, p, {"b0", "b1", "s0", "s1"});
    require_square(name, m, d);
    const double b0 = param(p, "b0", 0.0), b1 = param(p, "b1", -1.0);
    const double s0 = param(p, "s0", 1.0), s1 = param(p, "s1", 0.5);
    cs.drift = [b0, b1](double, std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = b0 + b1 * x[i];
    };
    cs.diffusion = [d, s0, s1](double, std::span<const double> x, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) out[i * d + i] = s0 + s1 * x[i];
    };
    cs.meta = {std::abs(b1), std::abs(s1), 1.0, 1.0, "affine drift and diagonal diffusion"};
  } else if (name == "tanh") {
    check_params(name, p, {"theta", "sigma"});
    require_square(name, m, d);
    const double theta = param(p, "theta", 1.0), s = param(p, "sigma", 1.0);
    cs.drift = [theta](double, std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = -theta * std::tanh(x[i]);
    };
    cs.diffusion = [d, s](double, std::span<const double> x, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) out[i * d + i] = s * (1.0 + 0.5 * std::tanh(x[i]));
    };
    cs.meta = {std::abs(theta), 0.5 * std::abs(s), 1.0, 1.0, "bounded smooth coefficients"};
  } else if (name == "rotation") {
    check_params(name, p, {"omega", "kappa", "sigma"});
    if (m != 2 || d != 2) throw DomainError("coefficients 'rotation' require m = d = 2");
    const double omega = param(p, "omega", 1.0), kappa = param(p, "kappa", 0.5), s = param(p, "sigma", 1.0);
    cs.drift = [omega, kappa](double, std::span<const double> x, std::span<double> out) {
      out[0] = -omega * x[1] - kappa * x[0];
      out[1] = omega * x[0] - kappa * x[1];
    };
    cs.diffusion = diag_const(s);
    cs.meta = {std::hypot(omega, kappa), 0.0, 1.0, 1.0, "rotation with linear damping"};
  } else {
    throw DomainError("unknown coefficient family '" + name_in + "'");
  }
  return cs;
}

std::vector<std::string> coefficient_names() {
  return {"zero", "additive", "constant", "ou", "linear_noise", "affine", "tanh", "rotation"};
}

LipschitzProbe lipschitz_probe(const CoefficientSet& cs, std::size_t n_pairs, std::uint64_t seed, double scale) {
  LipschitzProbe r;
  std::vector<double> x(cs.m), y(cs.m), bx(cs.m), by(cs.m), sx(cs.m * cs.d), sy(cs.m * cs.d);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    NormalStream rng(seed, i);
    const double t = rng.uniform();
    for (std::size_t c = 0; c < cs.m; ++c) {
      x[c] = scale * (2.0 * rng.uniform() - 1.0);
      y[c] = scale * (2.0 * rng.uniform() - 1.0);
    }
    cs.drift(t, x, bx);
    cs.drift(t, y, by);
    cs.diffusion(t, x, sx);
    cs.diffusion(t, y, sy);
    double dx = 0.0, db = 0.0, ds = 0.0;
    for (std::size_t c = 0; c < cs.m; ++c) {
      dx += (x[c] - y[c]) * (x[c] - y[c]);
      db += (bx[c] - by[c]) * (bx[c] - by[c]);
    }
    for (std::size_t c = 0; c < sx.size(); ++c) ds += (sx[c] - sy[c]) * (sx[c] - sy[c]);
    if (dx == 0.0) continue;
    r.drift_ratio = std::max(r.drift_ratio, std::sqrt(db / dx));
    r.diffusion_ratio = std::max(r.diffusion_ratio, std::sqrt(ds / dx));
  }
  return r;
}

std::string to_string(DriverKind k) {
  switch (k) {
    case DriverKind::skeleton: return "skeleton";
    case DriverKind::controlled: return "controlled";
    case DriverKind::noise: return "noise";
  }
  return "noise";
}

SolvedPath solve_young(std::span<const double> x0, const CoefficientSet& coeffs, const GridFn& driver,
                       const NumericConfig& cfg) {
  check_driver(driver, coeffs, x0.size());
  SolvedPath s;
  s.path = euler(x0, coeffs, driver.n_steps(),
                 [&](std::size_t k, std::size_t c) { return driver(k + 1, c) - driver(k, c); }, cfg);
  s.driver = driver;
  s.meta = coeffs.meta;
  return s;
}

SolvedPath skeleton(std::span<const double> x0, const CoefficientSet& coeffs, const CmControl& ctrl,
                    SkeletonRoute route, const NumericConfig& cfg) {
  if (!(ctrl.hurst() > 0.5 && ctrl.hurst() < 1.0)) throw DomainError("skeleton: hurst must lie in (1/2,1)");
  SolvedPath s;
  if (route == SkeletonRoute::kernel) {
    s = solve_young(x0, coeffs, ctrl.path(), cfg);
  } else {
    const GridFn dv = cm_derivative(ctrl);
    check_driver(dv, coeffs, x0.size());
    const double h = dv.step();
    s.path = euler(x0, coeffs, dv.n_steps(), [&](std::size_t k, std::size_t c) { return dv(k, c) * h; }, cfg);
    s.driver = ctrl.path();
    s.meta = coeffs.meta;
  }
  s.kind = DriverKind::skeleton;
  s.hurst = ctrl.hurst();
  return s;
}

SolvedPath controlled_path(std::span<const double> x0, const CoefficientSet& coeffs, const CmControl& ctrl,
                           double eps, const GridFn& fbm_path, const NumericConfig& cfg) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw DomainError("controlled_path: eps must be >= 0");
  if (eps == 0.0) return skeleton(x0, coeffs, ctrl, SkeletonRoute::kernel, cfg);
  const GridFn& v = ctrl.path();
  if (!v.same_grid(fbm_path)) throw DomainError("controlled_path: control and fBm grids differ");
  SolvedPath s = solve_young(x0, coeffs, v + fbm_path.scaled(std::sqrt(eps)), cfg);
  s.kind = DriverKind::controlled;
  s.hurst = ctrl.hurst();
  s.eps = eps;
  return s;
}

SolvedPath small_noise_path(std::span<const double> x0, const CoefficientSet& coeffs, double eps,
                            const GridFn& fbm_path, const NumericConfig& cfg) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw DomainError("small_noise_path: eps must be >= 0");
  SolvedPath s = solve_young(x0, coeffs, fbm_path.scaled(std::sqrt(eps)), cfg);
  s.kind = DriverKind::noise;
  s.eps = eps;
  return s;
}

NormReport norm_report(const SolvedPath& sol, double alpha, double delta) {
  const double H = sol.hurst;
  if (!(H > 0.5 && H < 1.0)) throw DomainError("norm_report: solution carries no admissible hurst index");
  const double g = sol.meta.gamma;
  const double upper = std::min({0.5, sol.meta.lambda, g / (1.0 + g)});
  if (!(alpha > 1.0 - H && alpha < upper)) {
    throw DomainError("norm_report: alpha must lie in (" + fmt17(1.0 - H) + ", " + fmt17(upper) + ")");
  }
  if (!(delta > 0.0 && delta < alpha - (1.0 - H))) {
    throw DomainError("norm_report: delta must lie in (0, " + fmt17(alpha - (1.0 - H)) + ")");
  }
  NormReport r;
  r.alpha = alpha;
  r.delta = delta;
  r.solution = norms(sol.path, 1.0 - alpha, alpha);
  r.driver_holder = norms(sol.driver, 1.0 - alpha + delta, alpha).holder_norm;
  return r;
}

GrowthReport growth_sweep(std::span<const double> x0, const CoefficientSet& coeffs, const GridFn& driver,
                          double alpha, const std::vector<double>& scales) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("growth_sweep: alpha must lie in (0,1/2)");
  if (scales.size() < 2) throw DomainError("growth_sweep: need at least two scales");
  GrowthReport r;
  r.scales = scales;
  r.kappa = 1.0 / (1.0 - alpha);
  std::vector<double> lx, ly;
  for (double c : scales) {
    if (!(c > 0.0)) throw DomainError("growth_sweep: scales must be positive");
    const SolvedPath s = solve_young(x0, coeffs, driver.scaled(c));
    double sup = 0.0;
    for (double v : s.path.values()) sup = std::max(sup, std::abs(v));
    r.sup_norms.push_back(sup);
    lx.push_back(std::log(c));
    ly.push_back(std::log(std::log1p(sup)));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  r.fitted_exponent = sxx > 0.0 ? sxy / sxx : 0.0;
  r.within_bound = r.fitted_exponent <= 1.2 * r.kappa;
  return r;
}

void write_solved_csv(std::ostream& os, const SolvedPath& sol) {
  os << "# fbmldp-solution v1 kind=" << to_string(sol.kind) << " hurst=" << fmt17(sol.hurst)
     << " eps=" << fmt17(sol.eps) << " n_steps=" << sol.path.n_steps() << "\n";
  os << "t";
  for (std::size_t c = 0; c < sol.path.dim(); ++c) os << ",x" << c;
  for (std::size_t c = 0; c < sol.driver.dim(); ++c) os << ",g" << c;
  os << "\n";
  for (std::size_t k = 0; k < sol.path.n_nodes(); ++k) {
    os << fmt17(sol.path.time(k));
    for (double v : sol.path.node(k)) os << "," << fmt17(v);
    for (double v : sol.driver.node(k)) os << "," << fmt17(v);
    os << "\n";
  }
}

}  // namespace fbmldp
