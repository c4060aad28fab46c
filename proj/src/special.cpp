#include "fbmldp/special.hpp"

#include <cmath>
#include <string>

#include "fbmldp/errors.hpp"

namespace fbmldp {

namespace {

bool is_nonpositive_integer(double x) {
  const double r = std::round(x);
  return r <= 0.0 && std::abs(x - r) < 1e-12;
}

double distance_to_integer(double x) { return std::abs(x - std::round(x)); }

}  // namespace

double reciprocal_gamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

double hypergeometric_series(double a, double b, double c, double z, const NumericConfig& cfg) {
  if (is_nonpositive_integer(c)) {
    throw DomainError("gauss_2f1: c must not be a non-positive integer (c = " + std::to_string(c) + ")");
  }
  if (!(std::abs(z) < 1.0)) throw DomainError("hypergeometric_series: |z| must be < 1");

  double term = 1.0;
  double sum = 1.0;
  for (std::size_t k = 0; k < cfg.series_max_terms; ++k) {
    const double kk = static_cast<double>(k);
    term *= (a + kk) * (b + kk) / ((c + kk) * (kk + 1.0)) * z;
    sum += term;
    if (term == 0.0 || std::abs(term) <= cfg.series_rel_tol * std::abs(sum)) return sum;
  }
  throw NumericError("gauss_2f1: series did not converge after " + std::to_string(cfg.series_max_terms) +
                     " terms (a=" + std::to_string(a) + ", b=" + std::to_string(b) +
                     ", c=" + std::to_string(c) + ", z=" + std::to_string(z) + ")");
}

double gauss_2f1(double a, double b, double c, double z, const NumericConfig& cfg) {
  if (is_nonpositive_integer(c)) {
    throw DomainError("gauss_2f1: c must not be a non-positive integer (c = " + std::to_string(c) + ")");
  }
  if (!std::isfinite(z) || z > 0.5) throw DomainError("gauss_2f1: requires finite z <= 0.5");
  if (a == 0.0 || b == 0.0 || z == 0.0) return 1.0;
  if (z >= 0.0) return hypergeometric_series(a, b, c, z, cfg);

  // Pfaff: argument w = z/(z-1) in (0,1).
  const double w = z / (z - 1.0);
  const double prefactor = std::pow(1.0 - z, -a);
  const double bp = c - b;
  if (bp == 0.0) return prefactor;

  const double cab = c - a - bp;
  const bool polynomial = is_nonpositive_integer(a) || is_nonpositive_integer(bp);
  if (w <= 0.5 || polynomial || distance_to_integer(cab) < cfg.connection_int_gap) {
    return prefactor * hypergeometric_series(a, bp, c, w, cfg);
  }

  // Connection formula around w = 1:
  //   F(a,b;c;w) = G(c)G(c-a-b)/(G(c-a)G(c-b)) F(a,b;a+b-c+1;1-w)
  //              + (1-w)^{c-a-b} G(c)G(a+b-c)/(G(a)G(b)) F(c-a,c-b;c-a-b+1;1-w)
  const double x = 1.0 - w;
  const double gc = std::tgamma(c);
  const double coef1 = gc * std::tgamma(cab) * reciprocal_gamma(c - a) * reciprocal_gamma(c - bp);
  const double coef2 = gc * std::tgamma(-cab) * reciprocal_gamma(a) * reciprocal_gamma(bp);
  double value = 0.0;
  if (coef1 != 0.0) value += coef1 * hypergeometric_series(a, bp, 1.0 - cab, x, cfg);
  if (coef2 != 0.0) value += coef2 * std::pow(x, cab) * hypergeometric_series(c - a, c - bp, 1.0 + cab, x, cfg);
  return prefactor * value;
}

}  // namespace fbmldp
