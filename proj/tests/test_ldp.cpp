#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fbmldp/errors.hpp"
#include "fbmldp/fbm.hpp"
#include "fbmldp/ldp.hpp"
#include "helpers.hpp"

using namespace fbmldp;

namespace {

SdeProblem additive_problem() {
  SdeProblem p;
  p.coeffs = make_coefficients("additive", 1, 1);
  p.x0 = {0.0};
  return p;
}

/// Minimal-norm knot control reaching X_1 = a for the additive equation,
/// from the continuous kernel integrated over each knot.
std::vector<double> knot_oracle(double a, std::size_t n_ctrl, double hurst) {
  const std::size_t sub = 512;
  std::vector<double> A(n_ctrl, 0.0);
  for (std::size_t i = 0; i < n_ctrl; ++i) {
    for (std::size_t j = 0; j < sub; ++j) {
      const double s = (i + (j + 0.5) / sub) / n_ctrl;
      A[i] += kernel_k(1.0, s, hurst) / (sub * n_ctrl);
    }
  }
  const double w = 1.0 / n_ctrl;
  double q = 0.0;
  for (double x : A) q += x * x / w;
  std::vector<double> theta(n_ctrl);
  for (std::size_t i = 0; i < n_ctrl; ++i) theta[i] = a * A[i] / (w * q);
  return theta;
}

double knot_value(const std::vector<double>& theta) {
  double s = 0.0;
  for (double x : theta) s += x * x;
  return 0.5 * s / theta.size();
}

}  // namespace

TEST_CASE("event validation and violation") {
  CHECK_THROWS_AS(validate(EventSpec::sup_exceedance(-1.0), 1), DomainError);
  CHECK_THROWS_AS(validate(EventSpec::terminal_target({0.0}, 0.0), 1), DomainError);
  CHECK_THROWS_AS(validate(EventSpec::terminal_target({0.0, 1.0}, 0.1), 1), DomainError);
  CHECK_NOTHROW(validate(EventSpec::terminal_exceedance(-3.0), 1));
  auto path = GridFn::sample_scalar(8, [](double t) { return t; });
  GridFn ref(8, 1);
  CHECK(event_violation(EventSpec::terminal_exceedance(0.5), path, ref) == 0.0);
  CHECK(event_violation(EventSpec::terminal_exceedance(1.5), path, ref) > 0.0);
  CHECK(event_violation(EventSpec::sup_exceedance(0.9), path, ref) == 0.0);
  CHECK(event_violation(EventSpec::terminal_target({1.05}, 0.1), path, ref) == 0.0);
  CHECK(event_violation(EventSpec::terminal_target({2.0}, 0.1), path, ref) > 0.0);
  CHECK(event_kind_from_string(to_string(EventKind::sup_exceedance)) == EventKind::sup_exceedance);
}

TEST_CASE("rate of a terminal exceedance for additive noise") {
  auto p = additive_problem();
  auto r1 = rate_minimize(p, EventSpec::terminal_exceedance(1.0));
  REQUIRE(r1.feasible);
  CHECK(r1.value >= 0.475);
  CHECK(r1.value <= 0.525);
  CHECK(r1.residual <= 1e-3);

  auto r2 = rate_minimize(p, EventSpec::terminal_exceedance(2.0));
  CHECK(r2.value / r1.value == doctest::Approx(4.0).epsilon(0.1));

  auto r0 = rate_minimize(p, EventSpec::terminal_exceedance(0.0));
  CHECK(r0.value == 0.0);
  CHECK(cm_norm(r0.control) == 0.0);
}

TEST_CASE("optimal knot control matches the quadratic program") {
  auto p = additive_problem();
  RateOptions o;
  auto r = rate_minimize(p, EventSpec::terminal_exceedance(1.0), o);
  auto theta = knot_oracle(1.0, o.n_ctrl, p.hurst);
  auto oracle = knot_control(theta, o.n_ctrl, p.n_steps, 1, p.hurst);
  CHECK(cm_norm(r.control.density() - oracle.density()) / cm_norm(oracle) <= 0.05);
  CHECK(r.value == doctest::Approx(knot_value(theta)).epsilon(0.05));
}

TEST_CASE("finer knot families never raise the rate") {
  auto p = additive_problem();
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k : {4, 8, 16}) {
    RateOptions o;
    o.n_ctrl = k;
    const double v = rate_minimize(p, EventSpec::terminal_exceedance(1.0), o).value;
    CHECK(v <= prev * 1.02);
    prev = v;
  }
}

TEST_CASE("penalty solutions end inside the event") {
  SdeProblem ou;
  ou.coeffs = make_coefficients("ou", 1, 1);
  ou.x0 = {0.2};
  auto s = rate_minimize(ou, EventSpec::sup_exceedance(0.8));
  CHECK(s.feasible);
  CHECK(s.residual <= 1e-3);

  SdeProblem rot;
  rot.coeffs = make_coefficients("rotation", 2, 2);
  rot.x0 = {1.0, 0.0};
  rot.n_steps = 128;
  RateOptions o;
  o.n_ctrl = 8;
  auto t = rate_minimize(rot, EventSpec::terminal_target({-0.2, 0.8}, 0.1), o);
  CHECK(t.feasible);
  CHECK(t.residual <= 1e-3);
  CHECK(t.diagnostics.start_values.size() == o.starts);
}

TEST_CASE("unreachable events are infeasible") {
  SdeProblem p;
  p.coeffs = make_coefficients("zero", 1, 1);
  p.x0 = {0.0};
  auto r = rate_minimize(p, EventSpec::terminal_exceedance(1.0));
  CHECK_FALSE(r.feasible);
  CHECK(std::isinf(r.value));
}

TEST_CASE("problem validation") {
  auto p = additive_problem();
  p.hurst = 0.5;
  CHECK_THROWS_AS(validate(p), DomainError);
  p.hurst = 0.75;
  p.x0 = {0.0, 1.0};
  CHECK_THROWS_AS(validate(p), DomainError);
}

TEST_CASE("variational Laplace value") {
  auto p = additive_problem();
  CHECK(laplace_variational(p, make_functional("zero")).value == 0.0);
  CHECK(laplace_variational(p, make_functional("constant", {{"c", 0.7}})).value ==
        doctest::Approx(0.7).epsilon(1e-12));
  CHECK(laplace_variational(p, make_functional("terminal_gain")).value == doctest::Approx(0.0).epsilon(1e-9));

  // 1-d scan: reach u = z at cost z^2/2 and pay min((1 - z)^+, 1)
  double scan = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 6000; ++i) {
    const double z = -3.0 + i * 1e-3;
    scan = std::min(scan, std::min(std::max(1.0 - z, 0.0), 1.0) + 0.5 * z * z);
  }
  const double v = laplace_variational(p, make_functional("terminal_shortfall")).value;
  CHECK(std::abs(v - scan) <= 0.05 * scan);
  CHECK_THROWS_AS(make_functional("quadratic"), DomainError);
}

TEST_CASE("Monte Carlo Laplace functional") {
  auto p = additive_problem();
  p.n_steps = 64;
  auto c = laplace_mc(p, make_functional("constant", {{"c", 0.4}}), 0.3, 1000, 1);
  CHECK(c.value == 0.4);
  for (const auto& name : functional_names()) {
    auto h = make_functional(name);
    for (double eps : {1.0, 0.2}) {
      auto r = laplace_mc(p, h, eps, 1000, 2, 2);
      CHECK(r.value >= h.inf_h);
      CHECK(r.value <= h.sup_h);
    }
  }
  auto a = laplace_mc(p, make_functional("sup_capped"), 0.2, 1000, 3, 1);
  auto b = laplace_mc(p, make_functional("sup_capped"), 0.2, 1000, 3, 4);
  CHECK(a.value == b.value);
  CHECK(a.std_err == b.std_err);
  CHECK_THROWS_AS(laplace_mc(p, make_functional("zero"), 0.2, 10, 3), DomainError);
  CHECK_THROWS_AS(laplace_mc(p, make_functional("zero"), 1.5, 1000, 3), DomainError);
}

TEST_CASE("Girsanov weights") {
  const std::size_t n = 128, N = 10000;
  auto zero = CmControl::zero(0.75, n, 1);
  auto table = VolterraTable::get(n, 0.75);
  auto d0 = draw_volterra(*table, 1, 1, 0);
  auto w0 = girsanov_weight(zero, 0.5, d0.increments);
  CHECK(w0.weight == 1.0);
  CHECK(w0.log_weight == 0.0);

  auto dens = CellFn::sample_scalar(n, [](double s) { return std::sqrt(3.0) * s; });
  CmControl unit(0.75, dens.scaled(1.0 / cm_norm(dens)));
  double m = 0.0, m2 = 0.0, lw = 0.0, lw2 = 0.0, sh = 0.0, sh2 = 0.0;
  const double eps = 0.25, x0 = 0.3;
  for (std::size_t i = 0; i < N; ++i) {
    auto d = draw_volterra(*table, 1, 2, i);
    const double w = girsanov_weight(unit, 1.0, d.increments).weight;
    m += w;
    m2 += w * w;
    const double l = girsanov_weight(unit, eps, d.increments).log_weight;
    lw += l;
    lw2 += l * l;
    const double y = std::exp(l) * (x0 + unit.path()(n) + std::sqrt(eps) * d.path(n));
    sh += y;
    sh2 += y * y;
  }
  m /= N;
  lw /= N;
  sh /= N;
  CHECK(std::abs(m - 1.0) <= 3.0 * std::sqrt((m2 / N - m * m) / N));
  CHECK(std::abs(lw + 0.5 / eps) <= 3.0 * std::sqrt((lw2 / N - lw * lw) / N));
  CHECK(std::abs(sh - x0) <= 3.0 * std::sqrt((sh2 / N - sh * sh) / N));
}

TEST_CASE("importance sampling") {
  auto p = additive_problem();
  p.n_steps = 64;
  auto sure = is_probability(p, EventSpec::terminal_exceedance(-5.0), 0.1, 1000, 1);
  CHECK(sure.p_hat == 1.0);
  CHECK(sure.log_p_hat == 0.0);

  auto zero = CmControl::zero(p.hurst, p.n_steps, 1);
  auto crude = is_probability(p, EventSpec::terminal_exceedance(0.5), 0.25, 10000, 4, zero, {}, 4);
  auto is = is_probability(p, EventSpec::terminal_exceedance(0.5), 0.25, 10000, 5, std::nullopt, {}, 4);
  const double exact = 0.5 * std::erfc(1.0 / std::sqrt(2.0));
  CHECK(std::abs(crude.p_hat - exact) <= 3.0 * crude.std_err);
  CHECK(std::abs(is.p_hat - crude.p_hat) <= 3.0 * std::hypot(is.std_err, crude.std_err));
  CHECK(is.rate.has_value());

  auto rare = is_probability(p, EventSpec::terminal_exceedance(1.0), 0.04, 1000, 6, zero);
  CHECK(rare.zero_hits);
  CHECK(rare.n_hits == 0);
  CHECK(std::isinf(rare.log_p_hat));
  CHECK_FALSE(rare.message.empty());

  auto a = is_probability(p, EventSpec::terminal_exceedance(1.0), 0.1, 1000, 7, std::nullopt, {}, 1);
  auto b = is_probability(p, EventSpec::terminal_exceedance(1.0), 0.1, 1000, 7, std::nullopt, {}, 3);
  CHECK(a.p_hat == b.p_hat);
  CHECK(a.std_err == b.std_err);
}

TEST_CASE("scaling table") {
  auto p = additive_problem();
  p.n_steps = 64;
  CHECK_THROWS_AS(scaling_table(p, EventSpec::terminal_exceedance(1.0), {0.1, 0.2}, 1000, 1), DomainError);
  auto t = scaling_table(p, EventSpec::terminal_exceedance(-5.0), {0.5, 0.1}, 1000, 1);
  REQUIRE(t.rows.size() == 2);
  for (auto& r : t.rows) {
    CHECK(r.minus_eps_log_p == 0.0);
    CHECK(r.rate == 0.0);
  }
  auto a = scaling_table(p, EventSpec::terminal_exceedance(1.0), {0.25, 0.1}, 1000, 2);
  auto b = scaling_table(p, EventSpec::terminal_exceedance(1.0), {0.25, 0.1}, 1000, 2, {}, 3);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.rows[i].p_hat == b.rows[i].p_hat);
    CHECK(a.rows[i].gap == a.rows[i].minus_eps_log_p - a.rows[i].rate);
  }
}
