// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "fbmldp/cmspace.hpp"
#include "fbmldp/fbm.hpp"
#include "fbmldp/fracops.hpp"
#include "fbmldp/ldp.hpp"
#include "fbmldp/sde.hpp"
#include "helpers.hpp"

using namespace fbmldp;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Moments {
  double mean = 0.0, se = 0.0;
};

Moments moments(const std::vector<double>& x) {
  double m = 0.0, m2 = 0.0;
  for (double v : x) {
    m += v;
    m2 += v * v;
  }
  m /= x.size();
  return {m, std::sqrt(std::max(m2 / x.size() - m * m, 0.0) / x.size())};
}

SdeProblem additive(std::size_t n) {
  SdeProblem p;
  p.coeffs = make_coefficients("additive", 1, 1);
  p.x0 = {0.0};
  p.n_steps = n;
  return p;
}

double tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

void covariance_reconstruction() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double h : {0.6, 0.75, 0.9})
    for (int i = 1; i <= 5; ++i)
      for (int j = 1; j <= 5; ++j) {
        const double s = 0.2 * i, t = 0.2 * j;
        worst = std::max(worst, std::abs(kernel_covariance_quadrature(s, t, h, 512) - covariance(s, t, h)));
      }
  const double dt = seconds_since(t0);
  report(1, "covariance_reconstruction", worst <= 1e-3 && dt <= 10.0, fmt("max_err=%.3g (<=1e-3) time=%.2fs (<=10s)", worst, dt));
}

void sampler_law() {
  const std::size_t n = 64, N = 10000;
  const double h = 0.75, r_half = covariance(0.5, 1.0, h);
  auto check = [&](const FbmBatch& b, double tol_se, double bias_v, double bias_c) {
    std::vector<double> v, c;
    for (const auto& p : b.paths) {
      v.push_back(p(n) * p(n));
      c.push_back(p(n / 2) * p(n));
    }
    auto mv = moments(v), mc = moments(c);
    const double zv = std::abs(mv.mean - 1.0), zc = std::abs(mc.mean - r_half);
    const bool ok = zv <= tol_se * mv.se + bias_v && zc <= tol_se * mc.se + bias_c;
    return std::pair{ok, fmt("var=%.4f(se %.4f) cov=%.4f(se %.4f)", mv.mean, mv.se, mc.mean, mc.se)};
  };
  auto [ok_c, d_c] = check(sample_cholesky(n, h, 1, N, 2024, 4), 3.0, 0.0, 0.0);

  auto table = VolterraTable::get(n, h);
  double dv = 0.0, dc = 0.0;
  auto last = table->row(n), mid = table->row(n / 2);
  for (std::size_t j = 0; j < n; ++j) {
    dv += last[j] * last[j] / n;
    if (j < n / 2) dc += last[j] * mid[j] / n;
  }
  const double bias_v = std::abs(dv - 1.0), bias_c = std::abs(dc - r_half);
  auto [ok_v, d_v] = check(sample_volterra(n, h, 1, N, 2025, 4), 4.0, bias_v, bias_c);
  const bool ok = ok_c && ok_v && bias_v <= 2e-2 && bias_c <= 2e-2;
  report(2, "sampler_law", ok,
         "cholesky " + d_c + "; volterra " + d_v + fmt("; bias var=%.2g cov=%.2g (<=2e-2)", bias_v, bias_c));
}

void young_engines() {
  const std::size_t n = 1024;
  auto factor = CholeskyFactor::get(n, 0.75);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto f = draw_cholesky(*factor, 1, 31, 2 * i).path, g = draw_cholesky(*factor, 1, 31, 2 * i + 1).path;
    worst = std::max(worst, std::abs(young_frac(f, g, 0.35).value - young_rs(f, g)(n)));
  }
  report(3, "young_engine_agreement", worst <= 1e-3, fmt("max |frac - rs| = %.3g over 20 pairs (<=1e-3)", worst));
}

void solver_closed_forms() {
  const std::size_t n = 4096;
  auto g = GridFn::sample_scalar(n, [](double t) { return std::sin(3.0 * t) + 0.5 * t; });
  std::vector<double> x0{0.7};
  auto lin = solve_young(x0, make_coefficients("linear_noise", 1, 1), g).path;
  const double exact = 0.7 * std::exp(g(n) - g(0));
  const double rel = std::abs(lin(n) - exact) / exact;

  const std::size_t m = 1024;
  auto ode = solve_young(std::vector<double>{1.0}, make_coefficients("ou", 1, 1), GridFn(m, 1)).path;
  double ode_err = 0.0;
  for (std::size_t k = 0; k <= m; ++k) ode_err = std::max(ode_err, std::abs(ode(k) - std::exp(-ode.time(k))));

  auto b = draw_volterra(*VolterraTable::get(m, 0.75), 1, 3, 0).path;
  auto add = solve_young(std::vector<double>{0.4}, make_coefficients("additive", 1, 1), b).path;
  double add_err = 0.0;
  for (std::size_t k = 0; k <= m; ++k) add_err = std::max(add_err, std::abs(add(k) - (0.4 + b(k) - b(0))));
  const bool ok = rel <= 5e-3 && ode_err <= 2.0 / m && add_err <= 1e-12;
  report(4, "solver_closed_forms", ok,
         fmt("linear rel=%.3g (<=5e-3) ode=%.3g (<=%.3g) additive=%.2g (rounding)", rel, ode_err, 2.0 / m, add_err));
}

void holder_embedding() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const double h = 0.55 + 0.4 * ((i * 37) % 100) / 100.0;
    CmControl c(h, testutil::random_density(256, 41, i));
    const double nrm = cm_norm(c);
    if (nrm == 0.0) continue;
    worst = std::max(worst, norms(c.path(), h, 0.3).holder_norm / nrm);
  }
  report(5, "holder_embedding", worst <= 1.05, fmt("max holder/cm ratio = %.4f (<=1.05)", worst));
}

void rate_oracle() {
  auto p = additive(256);
  auto r1 = rate_minimize(p, EventSpec::terminal_exceedance(1.0));
  auto r2 = rate_minimize(p, EventSpec::terminal_exceedance(2.0));
  const double ratio = r2.value / r1.value;
  const bool ok = r1.feasible && r1.value >= 0.475 && r1.value <= 0.525 && std::abs(ratio / 4.0 - 1.0) <= 0.1;
  report(6, "rate_oracle", ok, fmt("I(1)=%.5f in [0.475,0.525], I(2)/I(1)=%.4f (4 +-10%%)", r1.value, ratio));
}

void girsanov_martingale() {
  const std::size_t n = 128, N = 10000;
  auto dens = CellFn::sample_scalar(n, [](double s) { return 1.0 + std::sin(4.0 * s); });
  CmControl unit(0.75, dens.scaled(1.0 / cm_norm(dens)));
  auto table = VolterraTable::get(n, 0.75);
  std::vector<double> w(N);
  for (std::size_t i = 0; i < N; ++i) w[i] = girsanov_weight(unit, 1.0, draw_volterra(*table, 1, 51, i).increments).weight;
  auto m = moments(w);
  report(7, "girsanov_martingale", std::abs(m.mean - 1.0) <= 3.0 * m.se,
         fmt("mean weight=%.4f se=%.4f (|mean-1| <= 3 se)", m.mean, m.se));
}

void rare_event() {
  auto p = additive(256);
  auto is = is_probability(p, EventSpec::terminal_exceedance(1.0), 0.04, 10000, 61, std::nullopt, {}, 4);
  const double oracle = tail(5.0);
  const bool ok_is = std::abs(is.p_hat - oracle) <= 3.0 * is.std_err;

  auto zero = CmControl::zero(p.hurst, p.n_steps, 1);
  auto crude = is_probability(p, EventSpec::terminal_exceedance(1.0), 0.25, 10000, 62, zero, {}, 4);
  auto tilted = is_probability(p, EventSpec::terminal_exceedance(1.0), 0.25, 10000, 63, std::nullopt, {}, 4);
  const double joint = std::hypot(crude.std_err, tilted.std_err);
  const bool ok_c = std::abs(crude.p_hat - tilted.p_hat) <= 3.0 * joint;
  report(8, "rare_event_is", ok_is && ok_c,
         fmt("p=%.4g se=%.2g vs %.4g; crude-is diff=%.3g", is.p_hat, is.std_err, oracle, crude.p_hat - tilted.p_hat) +
             fmt(" (<= 3*%.3g)", joint));
}

void ldp_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  auto t = scaling_table(additive(256), EventSpec::terminal_exceedance(1.0), {0.25, 0.1, 0.04}, 10000, 71, {}, 4);
  const double dt = seconds_since(t0);
  bool shrinking = true;
  std::string rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && std::abs(t.rows[i].gap) >= std::abs(t.rows[i - 1].gap)) shrinking = false;
    rows += fmt("eps=%.2f gap=%.4f ", t.rows[i].eps, t.rows[i].gap);
  }
  const double final_gap = std::abs(t.rows.back().gap);
  report(9, "ldp_scaling", shrinking && final_gap <= 0.08 && dt <= 300.0,
         rows + fmt("(final <=0.08) time=%.1fs", dt));
}

void laplace() {
  auto p = additive(128);
  bool sandwich = true;
  for (const auto& name : functional_names()) {
    auto h = make_functional(name);
    for (double eps : {1.0, 0.5, 0.2, 0.1}) {
      auto r = laplace_mc(p, h, eps, 2000, 81, 4);
      sandwich = sandwich && r.value >= h.inf_h && r.value <= h.sup_h;
    }
  }
  auto h = make_functional("terminal_shortfall");
  const double v = laplace_variational(p, h).value;
  bool trend = true;
  std::string rows;
  double prev_dist = 0.0, prev_se = 0.0;
  bool first = true;
  for (double eps : {0.5, 0.2, 0.1}) {
    auto r = laplace_mc(p, h, eps, 10000, 82, 4);
    const double dist = std::abs(r.value - v);
    trend = trend && dist <= 3.0 * r.std_err + 0.1;
    if (!first) trend = trend && dist <= prev_dist + 3.0 * std::hypot(r.std_err, prev_se);
    first = false;
    prev_dist = dist;
    prev_se = r.std_err;
    rows += fmt("eps=%.1f L=%.4f ", eps, r.value);
  }
  report(10, "laplace_sandwich_trend", sandwich && trend, fmt("variational=%.4f ", v) + rows);
}

void determinism() {
  bool same = true;
  auto eqv = [&](double a, double b) { same = same && std::memcmp(&a, &b, sizeof a) == 0; };
  for (int s = 0; s < 2; ++s) {
    auto a = s ? sample_cholesky(64, 0.7, 2, 40, 91, 1) : sample_volterra(64, 0.7, 2, 40, 91, 1);
    auto b = s ? sample_cholesky(64, 0.7, 2, 40, 91, 4) : sample_volterra(64, 0.7, 2, 40, 91, 4);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t k = 0; k < a.paths[i].values().size(); ++k) eqv(a.paths[i].values()[k], b.paths[i].values()[k]);
  }
  SdeProblem ou;
  ou.coeffs = make_coefficients("ou", 1, 1);
  ou.x0 = {0.1};
  ou.n_steps = 64;
  RateOptions o1, o4;
  o1.n_ctrl = o4.n_ctrl = 8;
  o4.workers = 4;
  auto r1 = rate_minimize(ou, EventSpec::sup_exceedance(0.6), o1), r4 = rate_minimize(ou, EventSpec::sup_exceedance(0.6), o4);
  eqv(r1.value, r4.value);
  for (std::size_t j = 0; j < 64; ++j) eqv(r1.control.density()(j), r4.control.density()(j));
  auto l1 = laplace_mc(ou, make_functional("sup_capped"), 0.2, 1000, 92, 1);
  auto l4 = laplace_mc(ou, make_functional("sup_capped"), 0.2, 1000, 92, 4);
  eqv(l1.value, l4.value);
  eqv(l1.std_err, l4.std_err);
  auto i1 = is_probability(ou, EventSpec::terminal_exceedance(0.8), 0.1, 1000, 93, std::nullopt, o1, 1);
  auto i4 = is_probability(ou, EventSpec::terminal_exceedance(0.8), 0.1, 1000, 93, std::nullopt, o1, 4);
  eqv(i1.p_hat, i4.p_hat);
  eqv(i1.std_err, i4.std_err);
  auto s1 = scaling_table(ou, EventSpec::terminal_exceedance(0.8), {0.2, 0.1}, 1000, 94, o1, 1);
  auto s4 = scaling_table(ou, EventSpec::terminal_exceedance(0.8), {0.2, 0.1}, 1000, 94, o4, 4);
  for (std::size_t i = 0; i < 2; ++i) eqv(s1.rows[i].minus_eps_log_p, s4.rows[i].minus_eps_log_p);
  auto b = draw_volterra(*VolterraTable::get(64, 0.75), 1, 95, 0).path;
  auto x1 = small_noise_path(ou.x0, ou.coeffs, 0.1, b).path, x2 = small_noise_path(ou.x0, ou.coeffs, 0.1, b).path;
  for (std::size_t k = 0; k <= 64; ++k) eqv(x1(k), x2(k));
  report(11, "determinism", same, "sample, solve, rate, laplace_mc, is, scaling: workers 1 vs 4 bitwise");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::function<void()>> criteria = {
      covariance_reconstruction, sampler_law, young_engines,   solver_closed_forms, holder_embedding, rate_oracle,
      girsanov_martingale,       rare_event,  ldp_scaling,     laplace,             determinism};
  for (const auto& c : criteria) c();
  std::printf("%d of %zu criteria failed (%.1fs)\n", failures, criteria.size(), seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
