#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>

#include "fbmldp/grid.hpp"

namespace fbmldp {

/// Cameron-Martin element v = K_H v_dot stored by its L^2 density v_dot,
/// sampled at the cell midpoints. The path is materialized on first use
/// (kernel route) and shared between copies.
class CmControl {
 public:
  CmControl() = default;
  CmControl(double hurst, CellFn density);

  static CmControl zero(double hurst, std::size_t n_steps, std::size_t dim);

  double hurst() const noexcept { return hurst_; }
  const CellFn& density() const noexcept { return density_; }
  std::size_t n_steps() const noexcept { return density_.n_cells(); }
  std::size_t dim() const noexcept { return density_.dim(); }

  /// v = K_H v_dot at the nodes.
  const GridFn& path() const;

  CmControl scaled(double factor) const { return {hurst_, density_.scaled(factor)}; }

 private:
  struct Cache;
  double hurst_ = 0.0;
  CellFn density_;
  std::shared_ptr<Cache> cache_;
};

/// v(t_k) = sum_{j<k} w_{kj} v_dot_j h with the VolterraTable weights (the
/// same abscissae and weights used to synthesize fBm). Any H in (0,1).
GridFn apply_kh(const CellFn& density, double hurst);

/// K_H v_dot = c_H I^1( psi I^{H-1/2}(psi^{-1} v_dot) ), psi(u) = u^{H-1/2},
/// for H in (1/2,1): the inner fractional integral by product-midpoint, the
/// outer one by the trapezoid rule on cm_derivative.
GridFn apply_kh_composition(const CellFn& density, double hurst);

/// (sum_j |v_dot_j|^2 h)^{1/2}
double cm_norm(const CellFn& density);
double cm_norm(const CmControl& ctrl);

/// Density multiplied by 1_{[0,t]} at the midpoints.
CmControl project(const CmControl& ctrl, double t);

/// h'(t) = c_H t^{H-1/2} / Gamma(H-1/2) int_0^t (t-s)^{H-3/2} s^{1/2-H} v_dot(s) ds
/// at the nodes, H in (1/2,1). Each cell contributes its midpoint value of
/// s^{1/2-H} v_dot times the exact integral of the power kernel.
GridFn cm_derivative(const CmControl& ctrl);

/// CSV: "# fbmldp-control v1 hurst=<H> n_steps=<n> dim=<d>", then
/// "s_mid,v0,v1,..." and one row per cell, 17 significant digits.
void write_control_csv(std::ostream& os, const CmControl& ctrl);
CmControl read_control_csv(std::istream& is);

}  // namespace fbmldp
