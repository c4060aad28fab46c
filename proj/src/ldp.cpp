#include "fbmldp/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbmldp/errors.hpp"
#include "fbmldp/fbm.hpp"
#include "fbmldp/parallel.hpp"
#include "fbmldp/rng.hpp"

namespace fbmldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t knot_of(std::size_t cell, std::size_t n_ctrl, std::size_t n_steps) {
  return cell * n_ctrl / n_steps;
}

double param(const std::map<std::string, double>& given, const std::string& key, double fallback) {
  const auto it = given.find(key);
  return it == given.end() ? fallback : it->second;
}

void check_params(const std::string& name, const std::map<std::string, double>& given,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : given) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end()) {
      throw DomainError("functional '" + name + "': unknown parameter '" + k + "'");
    }
    if (!std::isfinite(v)) throw DomainError("functional '" + name + "': parameter '" + k + "' is not finite");
  }
}

// Knot controls as a linear family: v = sum_i theta_{i,c} V_i per component.
class KnotFamily {
 public:
  KnotFamily(const SdeProblem& p, std::size_t n_ctrl) : p_(p), n_ctrl_(n_ctrl), d_(p.coeffs.d) {
    const std::size_t n = p.n_steps;
    if (n_ctrl == 0 || n_ctrl > 64) throw DomainError("n_ctrl must lie in 1..64");
    if (n_ctrl > n) throw DomainError("n_ctrl must not exceed n_steps");
    cell_weight_.assign(n_ctrl, 0.0);
    for (std::size_t i = 0; i < n_ctrl; ++i) {
      std::vector<double> ind(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (knot_of(j, n_ctrl, n) == i) {
          ind[j] = 1.0;
          cell_weight_[i] += 1.0 / static_cast<double>(n);
        }
      }
      basis_.push_back(apply_kh(CellFn(n, 1, std::move(ind)), p.hurst));
    }
    reference_ = solve_young(p.x0, p.coeffs, GridFn(n, d_)).path;
  }

  std::size_t size() const noexcept { return n_ctrl_ * d_; }
  const GridFn& reference() const noexcept { return reference_; }

  double half_norm2(std::span<const double> theta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_ctrl_; ++i) {
      for (std::size_t c = 0; c < d_; ++c) s += cell_weight_[i] * theta[i * d_ + c] * theta[i * d_ + c];
    }
    return 0.5 * s;
  }

  GridFn skeleton_path(std::span<const double> theta) const {
    const std::size_t n = p_.n_steps;
    std::vector<double> v((n + 1) * d_, 0.0);
    for (std::size_t i = 0; i < n_ctrl_; ++i) {
      const auto bi = basis_[i].values();
      for (std::size_t c = 0; c < d_; ++c) {
        const double th = theta[i * d_ + c];
        if (th == 0.0) continue;
        for (std::size_t k = 0; k <= n; ++k) v[k * d_ + c] += th * bi[k];
      }
    }
    return solve_young(p_.x0, p_.coeffs, GridFn(n, d_, std::move(v))).path;
  }

  CmControl control(std::span<const double> theta) const {
    return knot_control(theta, n_ctrl_, p_.n_steps, d_, p_.hurst);
  }

 private:
  const SdeProblem& p_;
  std::size_t n_ctrl_;
  std::size_t d_;
  std::vector<double> cell_weight_;
  std::vector<GridFn> basis_;
  GridFn reference_;
};

std::vector<std::vector<double>> starting_points(std::size_t size, std::size_t n_ctrl, std::size_t d,
                                                 const RateOptions& opts) {
  std::vector<std::vector<double>> starts;
  starts.emplace_back(size, 0.0);
  if (opts.starts >= 2) {
    NormalStream rng(opts.seed, 1);
    std::vector<double> x(size);
    for (double& v : x) v = opts.random_amplitude * (2.0 * rng.uniform() - 1.0);
    starts.push_back(std::move(x));
  }
  if (opts.starts >= 3) {
    std::vector<double> x(size);
    for (std::size_t i = 0; i < n_ctrl; ++i) {
      const double b = std::sin(M_PI * (static_cast<double>(i) + 0.5) / static_cast<double>(n_ctrl));
      for (std::size_t c = 0; c < d; ++c) x[i * d + c] = b;
    }
    starts.push_back(std::move(x));
  }
  for (std::size_t s = 3; s < opts.starts; ++s) {
    NormalStream rng(opts.seed, s);
    std::vector<double> x(size);
    for (double& v : x) v = opts.random_amplitude * (2.0 * rng.uniform() - 1.0);
    starts.push_back(std::move(x));
  }
  return starts;
}

struct StartOutcome {
  std::vector<double> theta;
  double value = kInf;
  double residual = kInf;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

}  // namespace

void validate(const SdeProblem& p) {
  if (!(p.hurst > 0.5 && p.hurst < 1.0)) throw DomainError("hurst must lie in (1/2,1) for SDE workflows");
  if (p.n_steps == 0) throw DomainError("n_steps must be positive");
  if (p.x0.size() != p.coeffs.m) throw DomainError("x0 size must equal coefficient m");
  for (double v : p.x0) {
    if (!std::isfinite(v)) throw DomainError("x0 must be finite");
  }
  if (p.coeffs.d > kMaxFbmDim) throw DomainError("d must be <= 4");
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::terminal_exceedance: return "terminal_exceedance";
    case EventKind::sup_exceedance: return "sup_exceedance";
    case EventKind::terminal_target: return "terminal_target";
  }
  return "terminal_exceedance";
}

EventKind event_kind_from_string(const std::string& s) {
  if (s == "terminal_exceedance") return EventKind::terminal_exceedance;
  if (s == "sup_exceedance") return EventKind::sup_exceedance;
  if (s == "terminal_target") return EventKind::terminal_target;
  throw DomainError("unknown event kind '" + s + "'");
}

void validate(const EventSpec& e, std::size_t m) {
  switch (e.kind) {
    case EventKind::terminal_exceedance:
      if (!std::isfinite(e.a)) throw DomainError("terminal_exceedance: a must be finite");
      break;
    case EventKind::sup_exceedance:
      if (!(e.a >= 0.0) || !std::isfinite(e.a)) throw DomainError("sup_exceedance: a must be >= 0");
      break;
    case EventKind::terminal_target:
      if (!(e.r > 0.0) || !std::isfinite(e.r)) throw DomainError("terminal_target: r must be > 0");
      if (e.y.size() != m) throw DomainError("terminal_target: y must have m components");
      break;
  }
}

double event_violation(const EventSpec& e, const GridFn& path, const GridFn& reference) {
  const std::size_t n = path.n_steps();
  switch (e.kind) {
    case EventKind::terminal_exceedance:
      return std::max(0.0, e.a - path(n, 0));
    case EventKind::sup_exceedance: {
      double sup = 0.0;
      for (std::size_t k = 0; k <= n; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < path.dim(); ++c) {
          const double x = path(k, c) - reference(k, c);
          s += x * x;
        }
        sup = std::max(sup, std::sqrt(s));
      }
      return std::max(0.0, e.a - sup);
    }
    case EventKind::terminal_target: {
      double s = 0.0;
      for (std::size_t c = 0; c < path.dim(); ++c) {
        const double x = path(n, c) - e.y[c];
        s += x * x;
      }
      return std::max(0.0, std::sqrt(s) - e.r);
    }
  }
  return 0.0;
}

CmControl knot_control(std::span<const double> theta, std::size_t n_ctrl, std::size_t n_steps, std::size_t dim,
                       double hurst) {
  if (theta.size() != n_ctrl * dim) throw DomainError("knot_control: theta size must be n_ctrl * dim");
  std::vector<double> v(n_steps * dim);
  for (std::size_t j = 0; j < n_steps; ++j) {
    const std::size_t i = knot_of(j, n_ctrl, n_steps);
    for (std::size_t c = 0; c < dim; ++c) v[j * dim + c] = theta[i * dim + c];
  }
  return {hurst, CellFn(n_steps, dim, std::move(v))};
}

RateResult rate_minimize(const SdeProblem& p, const EventSpec& e, const RateOptions& opts) {
  validate(p);
  validate(e, p.coeffs.m);
  if (opts.starts == 0 || opts.stages == 0) throw DomainError("rate_minimize: starts and stages must be positive");

  RateResult res;
  for (std::size_t s = 0; s < opts.stages; ++s) {
    res.diagnostics.penalty_schedule.push_back(opts.mu0 * std::pow(opts.mu_factor, static_cast<double>(s)));
  }

  const KnotFamily fam(p, opts.n_ctrl);
  const GridFn& phi = fam.reference();
  if (event_violation(e, phi, phi) == 0.0) {
    res.value = 0.0;
    res.control = CmControl::zero(p.hurst, p.n_steps, p.coeffs.d);
    res.residual = 0.0;
    res.feasible = true;
    res.diagnostics.message = "zero control lies in the event";
    return res;
  }

  auto violation = [&](std::span<const double> th) { return event_violation(e, fam.skeleton_path(th), phi); };
  const auto starts = starting_points(fam.size(), opts.n_ctrl, p.coeffs.d, opts);
  std::vector<StartOutcome> out(starts.size());

  parallel_for(starts.size(), opts.workers, [&](std::size_t s) {
    StartOutcome& o = out[s];
    std::vector<double> th = starts[s];
    for (double mu : res.diagnostics.penalty_schedule) {
      const Objective obj = [&](std::span<const double> x) {
        const double r = violation(x);
        return fam.half_norm2(x) + mu * r * r;
      };
      const BfgsResult b = bfgs_minimize(obj, th, opts.bfgs);
      th = b.x;
      o.iterations += b.iterations;
      o.evaluations += b.evaluations;
      o.converged = b.converged;
    }
    double r = violation(th);
    if (r > 0.0 && std::any_of(th.begin(), th.end(), [](double x) { return x != 0.0; })) {
      auto scaled = [&](double f) {
        std::vector<double> x(th);
        for (double& v : x) v *= f;
        return x;
      };
      double lo = 1.0, hi = 2.0;
      while (hi <= 1024.0 && violation(scaled(hi)) > 0.0) {
        lo = hi;
        hi *= 2.0;
      }
      if (hi <= 1024.0) {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (violation(scaled(mid)) > 0.0 ? lo : hi) = mid;
        }
        th = scaled(hi);
        r = violation(th);
      }
    }
    o.theta = th;
    o.residual = r;
    o.value = r <= opts.residual_tol ? fam.half_norm2(th) : kInf;
  });

  std::size_t best = out.size();
  for (std::size_t s = 0; s < out.size(); ++s) {
    res.diagnostics.start_values.push_back(out[s].value);
    res.diagnostics.iterations.push_back(out[s].iterations);
    res.diagnostics.evaluations.push_back(out[s].evaluations);
    res.diagnostics.converged.push_back(out[s].converged);
    if (std::isfinite(out[s].value) && (best == out.size() || out[s].value < out[best].value)) best = s;
  }
  res.diagnostics.restarts = out.size();

  if (best == out.size()) {
    std::size_t closest = 0;
    for (std::size_t s = 1; s < out.size(); ++s) {
      if (out[s].residual < out[closest].residual) closest = s;
    }
    res.control = fam.control(out[closest].theta);
    res.residual = out[closest].residual;
    res.value = kInf;
    res.feasible = false;
    res.diagnostics.best_start = closest;
    res.diagnostics.message = "no feasible control found; rate reported as +inf";
    return res;
  }

  res.control = fam.control(out[best].theta);
  const SolvedPath sk = skeleton(p.x0, p.coeffs, res.control);
  res.residual = event_violation(e, sk.path, phi);
  res.feasible = res.residual <= opts.residual_tol;
  const double nrm = cm_norm(res.control);
  res.value = res.feasible ? 0.5 * nrm * nrm : kInf;
  res.diagnostics.best_start = best;
  res.diagnostics.message = res.feasible ? "ok" : "best control left the event after re-solve";
  return res;
}

Functional make_functional(const std::string& name, const std::map<std::string, double>& prm) {
  Functional f;
  f.name = name;
  f.params = prm;
  if (name == "zero") {
    check_params(name, prm, {});
    f.eval = [](const GridFn&, std::span<const double>) { return 0.0; };
  } else if (name == "constant") {
    check_params(name, prm, {"c"});
    const double c = param(prm, "c", 1.0);
    f.eval = [c](const GridFn&, std::span<const double>) { return c; };
    f.inf_h = f.sup_h = c;
  } else if (name == "terminal_gain") {
    check_params(name, prm, {"cap"});
    const double cap = param(prm, "cap", 1.0);
    if (!(cap > 0.0)) throw DomainError("terminal_gain: cap must be > 0");
    f.eval = [cap](const GridFn& x, std::span<const double> x0) {
      return std::min(std::max(x(x.n_steps(), 0) - x0[0], 0.0), cap);
    };
    f.sup_h = cap;
  } else if (name == "terminal_shortfall") {
    check_params(name, prm, {"level", "cap"});
    const double level = param(prm, "level", 1.0), cap = param(prm, "cap", 1.0);
    if (!(cap > 0.0)) throw DomainError("terminal_shortfall: cap must be > 0");
    f.eval = [level, cap](const GridFn& x, std::span<const double> x0) {
      return std::min(std::max(level - (x(x.n_steps(), 0) - x0[0]), 0.0), cap);
    };
    f.sup_h = cap;
  } else if (name == "sup_capped") {
    check_params(name, prm, {"cap"});
    const double cap = param(prm, "cap", 1.0);
    if (!(cap > 0.0)) throw DomainError("sup_capped: cap must be > 0");
    f.eval = [cap](const GridFn& x, std::span<const double> x0) {
      double sup = 0.0;
      for (std::size_t k = 0; k < x.n_nodes(); ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.dim(); ++c) s += (x(k, c) - x0[c]) * (x(k, c) - x0[c]);
        sup = std::max(sup, std::sqrt(s));
      }
      return std::min(sup, cap);
    };
    f.sup_h = cap;
  } else {
    throw DomainError("unknown functional '" + name + "'");
  }
  return f;
}

std::vector<std::string> functional_names() {
  return {"zero", "constant", "terminal_gain", "terminal_shortfall", "sup_capped"};
}

LaplaceVariationalResult laplace_variational(const SdeProblem& p, const Functional& h, const RateOptions& opts) {
  validate(p);
  if (opts.starts == 0) throw DomainError("laplace_variational: starts must be positive");
  const KnotFamily fam(p, opts.n_ctrl);
  const Objective obj = [&](std::span<const double> th) {
    return h.eval(fam.skeleton_path(th), p.x0) + fam.half_norm2(th);
  };
  const auto starts = starting_points(fam.size(), opts.n_ctrl, p.coeffs.d, opts);
  std::vector<BfgsResult> out(starts.size());
  parallel_for(starts.size(), opts.workers, [&](std::size_t s) { out[s] = bfgs_minimize(obj, starts[s], opts.bfgs); });

  std::size_t best = 0;
  LaplaceVariationalResult res;
  for (std::size_t s = 0; s < out.size(); ++s) {
    res.evaluations += out[s].evaluations;
    if (out[s].f < out[best].f) best = s;
  }
  res.control = fam.control(out[best].x);
  const SolvedPath sk = skeleton(p.x0, p.coeffs, res.control);
  const double nrm = cm_norm(res.control);
  res.value = h.eval(sk.path, p.x0) + 0.5 * nrm * nrm;
  res.converged = out[best].converged;
  res.message = out[best].message;
  return res;
}

LaplaceMcResult laplace_mc(const SdeProblem& p, const Functional& h, double eps, std::size_t n_samples,
                           std::uint64_t seed, std::size_t workers) {
  validate(p);
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("laplace_mc: eps must lie in (0,1]");
  if (n_samples < 1000) throw DomainError("laplace_mc: n_samples must be >= 1000");
  const auto table = VolterraTable::get(p.n_steps, p.hurst);
  std::vector<double> e(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    const FbmDraw draw = draw_volterra(*table, p.coeffs.d, seed, i);
    const SolvedPath s = small_noise_path(p.x0, p.coeffs, eps, draw.path);
    const double hv = h.eval(s.path, p.x0);
    if (!std::isfinite(hv)) throw NumericError("laplace_mc: functional returned a non-finite value");
    e[i] = -hv / eps;
  });
  const double mx = *std::max_element(e.begin(), e.end());
  double s1 = 0.0, s2 = 0.0;
  for (double v : e) {
    const double w = std::exp(v - mx);
    s1 += w;
    s2 += w * w;
  }
  const double nn = static_cast<double>(n_samples);
  if (!(s1 > 0.0)) throw NumericError("laplace_mc: all weights underflowed; use a larger eps");
  const double mean = s1 / nn;
  const double var = std::max(0.0, (s2 - nn * mean * mean) / (nn - 1.0));
  LaplaceMcResult r;
  r.n_samples = n_samples;
  r.value = std::clamp(-eps * (mx + std::log(mean)), h.inf_h, h.sup_h);
  r.std_err = eps * std::sqrt(var / nn) / mean;
  return r;
}

GirsanovWeight girsanov_weight(const CmControl& ctrl, double eps, const CellFn& db) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("girsanov_weight: eps must be > 0");
  const CellFn& v = ctrl.density();
  if (!v.same_grid(db)) throw DomainError("girsanov_weight: control and increments grids differ");
  double cross = 0.0;
  for (std::size_t i = 0; i < v.values().size(); ++i) cross += v.values()[i] * db.values()[i];
  const double nrm = cm_norm(v);
  GirsanovWeight w;
  w.log_weight = -cross / std::sqrt(eps) - 0.5 * nrm * nrm / eps;
  w.weight = std::exp(w.log_weight);
  return w;
}

IsResult is_probability(const SdeProblem& p, const EventSpec& e, double eps, std::size_t n_samples,
                        std::uint64_t seed, const std::optional<CmControl>& ctrl, const RateOptions& rate_opts,
                        std::size_t workers) {
  validate(p);
  validate(e, p.coeffs.m);
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("is_probability: eps must be > 0");
  if (n_samples < 2) throw DomainError("is_probability: n_samples must be >= 2");

  IsResult res;
  res.n_samples = n_samples;
  if (ctrl) {
    if (ctrl->n_steps() != p.n_steps || ctrl->dim() != p.coeffs.d || ctrl->hurst() != p.hurst) {
      throw DomainError("is_probability: control does not match the problem grid, dim or hurst");
    }
    res.tilt = *ctrl;
  } else {
    res.rate = rate_minimize(p, e, rate_opts);
    res.tilt = res.rate->feasible ? res.rate->control : CmControl::zero(p.hurst, p.n_steps, p.coeffs.d);
  }

  const auto table = VolterraTable::get(p.n_steps, p.hurst);
  const GridFn phi = solve_young(p.x0, p.coeffs, GridFn(p.n_steps, p.coeffs.d)).path;
  res.tilt.path();

  std::vector<double> logw(n_samples, -kInf);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    const FbmDraw draw = draw_volterra(*table, p.coeffs.d, seed, i);
    const SolvedPath s = controlled_path(p.x0, p.coeffs, res.tilt, eps, draw.path);
    if (event_violation(e, s.path, phi) == 0.0) logw[i] = girsanov_weight(res.tilt, eps, draw.increments).log_weight;
  });

  double mx = -kInf;
  for (double l : logw) {
    if (l > -kInf) {
      ++res.n_hits;
      mx = std::max(mx, l);
    }
  }
  if (res.n_hits == 0) {
    res.zero_hits = true;
    res.p_hat = 0.0;
    res.std_err = 0.0;
    res.log_p_hat = -kInf;
    res.message = "no sample hit the event; increase the tilt, eps or n_samples";
    return res;
  }
  double s1 = 0.0, s2 = 0.0;
  for (double l : logw) {
    if (l == -kInf) continue;
    const double a = std::exp(l - mx);
    s1 += a;
    s2 += a * a;
  }
  const double nn = static_cast<double>(n_samples);
  const double mean = s1 / nn;
  const double var = std::max(0.0, (s2 - nn * mean * mean) / (nn - 1.0));
  res.log_p_hat = mx + std::log(mean);
  res.p_hat = std::exp(res.log_p_hat);
  res.std_err = std::exp(mx) * std::sqrt(var / nn);
  res.message = "ok";
  return res;
}

ScalingTable scaling_table(const SdeProblem& p, const EventSpec& e, const std::vector<double>& eps_list,
                           std::size_t n_samples, std::uint64_t seed, const RateOptions& rate_opts,
                           std::size_t workers) {
  if (eps_list.empty()) throw DomainError("scaling_table: eps_list is empty");
  for (std::size_t i = 1; i < eps_list.size(); ++i) {
    if (!(eps_list[i] < eps_list[i - 1])) throw DomainError("scaling_table: eps_list must be strictly decreasing");
  }
  ScalingTable t;
  t.rate = rate_minimize(p, e, rate_opts);
  const CmControl tilt = t.rate.feasible ? t.rate.control : CmControl::zero(p.hurst, p.n_steps, p.coeffs.d);
  for (double eps : eps_list) {
    const IsResult is = is_probability(p, e, eps, n_samples, seed, tilt, rate_opts, workers);
    ScalingRow row;
    row.eps = eps;
    row.p_hat = is.p_hat;
    row.std_err = is.std_err;
    row.n_hits = is.n_hits;
    row.minus_eps_log_p = is.zero_hits ? kInf : -eps * is.log_p_hat;
    row.rate = t.rate.value;
    row.gap = row.minus_eps_log_p - row.rate;
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace fbmldp
