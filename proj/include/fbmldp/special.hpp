#pragma once

#include "fbmldp/grid.hpp"

namespace fbmldp {

/// Gauss hypergeometric function F(a, b, c; z) for real arguments, z <= 0.5.
///
/// For z < 0 the value is computed through the Pfaff transformation
///   F(a,b,c;z) = (1-z)^{-a} F(a, c-b, c; z/(z-1)),
/// which maps the argument into [0,1). When that argument exceeds 1/2 the
/// series is re-expanded around 1 with the standard connection formula, so
/// every power series actually summed has argument at most 1/2 (except when
/// c-a-b is an integer, where the direct series is summed and may run into
/// the term cap).
///
/// Throws DomainError for c in {0, -1, -2, ...} or z > 0.5, and NumericError
/// if a series has not converged after `cfg.series_max_terms` terms.
double gauss_2f1(double a, double b, double c, double z,
                 const NumericConfig& cfg = default_numeric_config());

/// Direct power series sum_k (a)_k (b)_k / ((c)_k k!) z^k, |z| < 1.
double hypergeometric_series(double a, double b, double c, double z,
                             const NumericConfig& cfg = default_numeric_config());

/// 1/Gamma(x), zero at the poles x = 0, -1, -2, ...
double reciprocal_gamma(double x);

}  // namespace fbmldp
