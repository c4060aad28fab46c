#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fbmldp/grid.hpp"

namespace fbmldp {

enum class Side { left, right };

/// How a node-sampled function is extended between nodes.
enum class Interp { linear, step };

/// Riemann-Liouville integral I^alpha_{0+} f (left) or I^alpha_{1-} f (right)
/// at the grid nodes, componentwise, alpha in (0,1].
///
/// Product-midpoint rule: on each cell f is replaced by its cell average and
/// the power kernel is integrated exactly, so (t-s)^{alpha-1} is never sampled
/// at s = t. The left version is 0 at t = 0, the right one at t = 1.
GridFn frac_integral(const GridFn& f, double alpha, Side side);

struct WeylResult {
  GridFn values;
  /// Node where the formula is singular (0 for left, n_steps for right). Its
  /// value is copied from the neighbouring node and should be excluded from
  /// error metrics.
  std::size_t flagged_node = 0;
};

/// Weyl derivative D^alpha_{0+} f or D^alpha_{1-} f at the grid nodes,
/// componentwise, alpha in (0,1).
///
/// The increment integral is evaluated exactly for the piecewise-linear
/// interpolant of f. For the right side the factor (-1)^alpha is omitted: the
/// returned value is the real bracket
///   [f(t)/(1-t)^alpha + alpha int_t^1 (f(t)-f(s))/(s-t)^{alpha+1} ds] / Gamma(1-alpha).
WeylResult weyl_derivative(const GridFn& f, double alpha, Side side);

/// Weyl derivative of a scalar grid function at arbitrary points of (0,1),
/// with f extended between nodes either linearly or as a left-continuous
/// step function (value f(t_j) on [t_j, t_{j+1})). Same sign convention as
/// weyl_derivative.
std::vector<double> weyl_derivative_at(const GridFn& f, double alpha, Side side,
                                       std::span<const double> points, Interp interp = Interp::linear);

/// Running left-point Riemann-Stieltjes integral
///   t_k -> sum_{j<k} f(t_j) (g(t_{j+1}) - g(t_j)).
/// f.dim() == 1 scales g; otherwise f is read as a (f.dim()/g.dim()) x g.dim()
/// row-major matrix and the result has f.dim()/g.dim() components.
GridFn young_rs(const GridFn& f, const GridFn& g);

struct YoungFracResult {
  double value = 0.0;
  /// Regularity estimates from dyadic-lag quadratic variation.
  double f_regularity = 1.0;
  double g_regularity = 1.0;
  /// Set when f_regularity <= alpha or g_regularity <= 1 - alpha.
  bool regularity_warning = false;
  std::string warning;
};

/// Young integral int_0^1 f dg through fractional integration by parts,
///   -int_0^1 D^alpha_{0+} f(t) . [D^{1-alpha}_{1-} g_{1-}](t) dt,
/// g_{1-} = g - g(1), with the two (-1)^. factors combined into the sign.
/// f is taken as a left-continuous step function and g as piecewise linear,
/// which makes the result a discretization of the same integrand as
/// young_rs. Scalar f and g only.
YoungFracResult young_frac(const GridFn& f, const GridFn& g, double alpha);

/// Hurst-type regularity estimate: half the log-log slope of the mean
/// squared increment over lags 1, 2, 4, ..., 16. Returns 1 for paths with zero
/// increments at some lag (treated as smooth) and clamps to [0, 1].
double regularity_estimate(const GridFn& f);

struct HolderReport {
  double sup_norm = 0.0;
  double holder_norm = 0.0;
  double lambda = 0.0;
  double w_alpha_norm = 0.0;
  double alpha = 0.0;
};

/// sup |f|, the lambda-Holder seminorm over node pairs (exact scan up to
/// cfg.holder_exact_max steps, strided above) and
///   ||f||_{alpha,inf} = sup_t { |f(t)| + int_0^t |f(t)-f(s)| / (t-s)^{alpha+1} ds }
/// with |.| the Euclidean norm.
HolderReport norms(const GridFn& f, double lambda, double alpha,
                   const NumericConfig& cfg = default_numeric_config());

}  // namespace fbmldp
