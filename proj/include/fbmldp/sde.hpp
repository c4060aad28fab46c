#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbmldp/cmspace.hpp"
#include "fbmldp/fracops.hpp"
#include "fbmldp/grid.hpp"

namespace fbmldp {

/// Regularity constants of a coefficient family: L Lipschitz constant of b
/// in x, M Lipschitz constant of sigma in x, lambda time-Holder exponent,
/// gamma Holder exponent of the x-gradient of sigma.
struct CoefficientMeta {
  double L = 0.0;
  double M = 0.0;
  double lambda = 1.0;
  double gamma = 1.0;
  std::string notes;
};

/// Drift b(t,x) in R^m and diffusion sigma(t,x) in R^{m x d} (row-major).
struct CoefficientSet {
  using Drift = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
  using Diffusion = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

  std::string name;
  std::size_t m = 1;
  std::size_t d = 1;
  Drift drift;
  Diffusion diffusion;
  CoefficientMeta meta;
  std::map<std::string, double> params;
};

/// Built-in families (parameters in brackets, defaults after '='):
///   zero                    b = 0, sigma = 0
///   additive [drift=0, sigma=1]       b = drift, sigma = sigma * I
///   ou [theta=1, sigma=1]             b = -theta x, sigma = sigma * I
///   linear_noise [sigma=1]            b = 0, sigma = sigma * diag(x), m = d
///   affine [b0=0, b1=-1, s0=1, s1=0.5] b = b0 + b1 x, sigma = diag(s0 + s1 x), m = d
///   tanh [theta=1, sigma=1]           b = -theta tanh(x), sigma = sigma * diag(1 + tanh(x)/2), m = d
///   rotation [omega=1, kappa=0.5, sigma=1] m = d = 2, b = omega J x - kappa x, sigma = sigma * I
/// "constant" is an alias of "additive". Unknown names or parameters throw DomainError.
CoefficientSet make_coefficients(const std::string& name, std::size_t m, std::size_t d,
                                 const std::map<std::string, double>& params = {});
std::vector<std::string> coefficient_names();

/// Largest |b(t,x)-b(t,y)|/|x-y| and Frobenius |sigma(t,x)-sigma(t,y)|/|x-y|
/// over random pairs in [-scale, scale]^m.
struct LipschitzProbe {
  double drift_ratio = 0.0;
  double diffusion_ratio = 0.0;
};
LipschitzProbe lipschitz_probe(const CoefficientSet& coeffs, std::size_t n_pairs, std::uint64_t seed,
                               double scale = 3.0);

enum class DriverKind { skeleton, controlled, noise };
std::string to_string(DriverKind k);

struct SolvedPath {
  GridFn path;
  GridFn driver;
  DriverKind kind = DriverKind::noise;
  double hurst = 0.0;
  double eps = 0.0;
  CoefficientMeta meta;
};

/// Left-point Euler scheme
///   X_{k+1} = X_k + b(t_k, X_k) h + sigma(t_k, X_k) (g_{k+1} - g_k),
/// the scheme behind young_rs. Throws NumericError (with the step index)
/// when a state component is non-finite or exceeds cfg.overflow_bound.
SolvedPath solve_young(std::span<const double> x0, const CoefficientSet& coeffs, const GridFn& driver,
                       const NumericConfig& cfg = default_numeric_config());

enum class SkeletonRoute {
  kernel,      // drive with the materialized control path
  derivative,  // sigma dv replaced by sigma h'(t) dt, h' from cm_derivative
};

/// Deterministic controlled equation x = x0 + int b dt + int sigma dv.
SolvedPath skeleton(std::span<const double> x0, const CoefficientSet& coeffs, const CmControl& ctrl,
                    SkeletonRoute route = SkeletonRoute::kernel,
                    const NumericConfig& cfg = default_numeric_config());

/// Driver v + sqrt(eps) B^H. eps = 0 returns the skeleton.
SolvedPath controlled_path(std::span<const double> x0, const CoefficientSet& coeffs, const CmControl& ctrl,
                           double eps, const GridFn& fbm_path,
                           const NumericConfig& cfg = default_numeric_config());

/// Driver sqrt(eps) B^H.
SolvedPath small_noise_path(std::span<const double> x0, const CoefficientSet& coeffs, double eps,
                            const GridFn& fbm_path, const NumericConfig& cfg = default_numeric_config());

struct NormReport {
  double alpha = 0.0;
  double delta = 0.0;
  /// sup, (1-alpha)-Holder and W^{alpha,inf} norms of the solution.
  HolderReport solution;
  /// (1-alpha+delta)-Holder norm of the driver.
  double driver_holder = 0.0;
};

/// Requires 1-H < alpha < min{1/2, lambda, gamma/(1+gamma)} and
/// 0 < delta < alpha - (1-H) (strict; boundary values are rejected).
NormReport norm_report(const SolvedPath& sol, double alpha, double delta);

struct GrowthReport {
  std::vector<double> scales;
  std::vector<double> sup_norms;
  /// log-log slope of log(1 + sup|X|) against the scale.
  double fitted_exponent = 0.0;
  double kappa = 0.0;  // 1/(1-alpha)
  bool within_bound = false;  // fitted_exponent <= 1.2 kappa
};

/// Solves with drivers c * g for each scale c and fits the growth exponent.
GrowthReport growth_sweep(std::span<const double> x0, const CoefficientSet& coeffs, const GridFn& driver,
                          double alpha, const std::vector<double>& scales = {1.0, 2.0, 4.0});

/// CSV "t,x0,...,g0,..." with a comment header line carrying kind, hurst and eps.
void write_solved_csv(std::ostream& os, const SolvedPath& sol);

}  // namespace fbmldp
