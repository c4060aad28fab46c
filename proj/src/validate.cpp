#include "fbmldp/validate.hpp"

#include <cmath>
#include <exception>
#include <functional>

#include "fbmldp/cmspace.hpp"
#include "fbmldp/fbm.hpp"
#include "fbmldp/fracops.hpp"
#include "fbmldp/ldp.hpp"
#include "fbmldp/sde.hpp"
#include "fbmldp/special.hpp"

namespace fbmldp {

namespace {

double sup_diff(const GridFn& a, const GridFn& b, std::size_t from = 0) {
  double e = 0.0;
  for (std::size_t i = from * a.dim(); i < a.values().size(); ++i) e = std::max(e, std::abs(a.values()[i] - b.values()[i]));
  return e;
}

CheckResult at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::size_t workers) {
  std::vector<CheckResult> out;
  auto guarded = [&](const std::string& name, const std::function<CheckResult()>& f) {
    try {
      out.push_back(f());
    } catch (const std::exception& e) {
      out.push_back({name, false, NAN, NAN, std::string("exception: ") + e.what()});
    }
  };

  guarded("gauss_2f1_log2", [] {
    return at_most("gauss_2f1_log2", std::abs(gauss_2f1(1, 1, 2, -1) - std::log(2.0)), 1e-12);
  });
  guarded("gauss_2f1_symmetry", [] {
    return at_most("gauss_2f1_symmetry",
                   std::abs(hypergeometric_series(0.3, -0.2, 1.25, 0.4) - hypergeometric_series(-0.2, 0.3, 1.25, 0.4)),
                   0.0);
  });
  guarded("frac_integral_half", [] {
    const auto one = GridFn::sample_scalar(512, [](double) { return 1.0; });
    const auto i = frac_integral(one, 0.5, Side::left);
    const auto ex = GridFn::sample_scalar(512, [](double t) { return std::sqrt(t) / std::tgamma(1.5); });
    return at_most("frac_integral_half", sup_diff(i, ex), 2e-3);
  });
  guarded("weyl_round_trip", [] {
    const auto f = GridFn::sample_scalar(1024, [](double t) { return std::sin(2.0 * M_PI * t); });
    const auto r = weyl_derivative(frac_integral(f, 0.4, Side::left), 0.4, Side::left);
    return at_most("weyl_round_trip", sup_diff(r.values, f, 1), 5e-2);
  });
  guarded("young_engines_agree", [] {
    const auto b = sample_cholesky(1024, 0.75, 1, 6, 20240601);
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& f = b.paths[2 * i];
      const auto& g = b.paths[2 * i + 1];
      worst = std::max(worst, std::abs(young_frac(f, g, 0.35).value - young_rs(f, g)(1024)));
    }
    return at_most("young_engines_agree", worst, 1e-3, "3 Cholesky fBm pairs, H=0.75, n=1024");
  });
  guarded("covariance_reconstruction", [] {
    double worst = 0.0;
    const double probes[] = {0.2, 0.4, 0.6, 0.8, 1.0};
    for (double h : {0.6, 0.75, 0.9}) {
      for (double s : probes) {
        for (double t : probes) {
          worst = std::max(worst, std::abs(kernel_covariance_quadrature(s, t, h, 512) - covariance(s, t, h)));
        }
      }
    }
    return at_most("covariance_reconstruction", worst, 1e-3);
  });
  guarded("volterra_half_is_cumsum", [] {
    const auto b = sample_volterra(64, 0.5, 1, 1, 3);
    double run = 0.0, e = 0.0;
    for (std::size_t k = 0; k < 64; ++k) {
      run += b.increments[0](k);
      e = std::max(e, std::abs(run - b.paths[0](k + 1)));
    }
    return at_most("volterra_half_is_cumsum", e, 0.0);
  });
  guarded("kh_routes_agree", [] {
    const auto v = CellFn::sample_scalar(512, [](double s) { return std::cos(2.0 * M_PI * s); });
    return at_most("kh_routes_agree", sup_diff(apply_kh(v, 0.75), apply_kh_composition(v, 0.75)), 5e-3);
  });
  guarded("projection_monotone", [] {
    const CmControl c(0.75, CellFn::sample_scalar(64, [](double s) { return 1.0 + s; }));
    const auto a = project(project(c, 0.7), 0.3);
    const auto b = project(c, 0.3);
    double e = 0.0;
    for (std::size_t j = 0; j < 64; ++j) e = std::max(e, std::abs(a.density()(j) - b.density()(j)));
    return at_most("projection_monotone", e, 0.0);
  });
  guarded("solver_linear_noise", [] {
    const auto g = GridFn::sample_scalar(4096, [](double t) { return std::sin(3.0 * t); });
    const auto cs = make_coefficients("linear_noise", 1, 1);
    const double x0[] = {1.0};
    const auto s = solve_young(x0, cs, g);
    const double ex = std::exp(g(4096) - g(0));
    return at_most("solver_linear_noise", std::abs(s.path(4096) - ex) / ex, 5e-3);
  });
  guarded("solver_decay_ode", [] {
    const auto cs = make_coefficients("ou", 1, 1, {{"theta", 1.0}, {"sigma", 0.0}});
    const double x0[] = {1.0};
    const auto s = solve_young(x0, cs, GridFn(512, 1));
    return at_most("solver_decay_ode", std::abs(s.path(512) - std::exp(-1.0)), 2.0 / 512.0);
  });
  guarded("rate_additive_oracle", [workers] {
    SdeProblem p{make_coefficients("additive", 1, 1), {0.0}, 0.75, 256};
    RateOptions o;
    o.workers = workers;
    const auto r = rate_minimize(p, EventSpec::terminal_exceedance(1.0), o);
    return at_most("rate_additive_oracle", std::abs(r.value - 0.5) / 0.5, 0.05);
  });
  guarded("girsanov_zero_control", [] {
    const auto b = sample_volterra(64, 0.75, 1, 1, 5);
    const auto w = girsanov_weight(CmControl::zero(0.75, 64, 1), 0.5, b.increments[0]);
    return at_most("girsanov_zero_control", std::abs(w.weight - 1.0), 0.0);
  });
  guarded("laplace_sandwich", [workers] {
    SdeProblem p{make_coefficients("additive", 1, 1), {0.0}, 0.75, 64};
    const auto h = make_functional("terminal_shortfall");
    const auto r = laplace_mc(p, h, 0.2, 2000, 11, workers);
    const bool ok = r.value >= h.inf_h && r.value <= h.sup_h;
    return CheckResult{"laplace_sandwich", ok, r.value, h.sup_h, "value within [inf h, sup h]"};
  });
  return out;
}

}  // namespace fbmldp
