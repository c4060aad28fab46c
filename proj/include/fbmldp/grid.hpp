#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fbmldp {

/// Vector-valued function sampled at the nodes t_k = k / n_steps of a uniform
/// grid on [0,1]. Values are stored node-major: value(k, c) at k * dim + c.
/// Immutable once constructed; every entry is finite.
class GridFn {
 public:
  GridFn() = default;
  /// Zero function.
  GridFn(std::size_t n_steps, std::size_t dim);
  GridFn(std::size_t n_steps, std::size_t dim, std::vector<double> values);

  /// Samples `f(t, out)` at every node; `out` has length `dim`.
  static GridFn sample(std::size_t n_steps, std::size_t dim,
                       const std::function<void(double, std::span<double>)>& f);
  static GridFn sample_scalar(std::size_t n_steps, const std::function<double(double)>& f);
  static GridFn constant(std::size_t n_steps, std::span<const double> value);

  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_nodes() const noexcept { return n_steps_ + 1; }
  double step() const noexcept { return 1.0 / static_cast<double>(n_steps_); }
  double time(std::size_t k) const noexcept {
    return static_cast<double>(k) / static_cast<double>(n_steps_);
  }

  double operator()(std::size_t k, std::size_t c = 0) const noexcept { return values_[k * dim_ + c]; }
  std::span<const double> node(std::size_t k) const noexcept {
    return {values_.data() + k * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }

  /// Single component as a scalar GridFn.
  GridFn component(std::size_t c) const;

  GridFn scaled(double factor) const;
  GridFn operator+(const GridFn& other) const;
  GridFn operator-(const GridFn& other) const;

  bool same_grid(const GridFn& other) const noexcept {
    return n_steps_ == other.n_steps_ && dim_ == other.dim_;
  }

 private:
  std::size_t n_steps_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Per-cell function on the same uniform grid: one vector value per
/// subinterval [t_j, t_{j+1}], attached to the midpoint s_j = (j + 1/2) / n.
/// Used for L^2 densities of controls and for Brownian increments.
class CellFn {
 public:
  CellFn() = default;
  CellFn(std::size_t n_cells, std::size_t dim);
  CellFn(std::size_t n_cells, std::size_t dim, std::vector<double> values);

  static CellFn sample(std::size_t n_cells, std::size_t dim,
                       const std::function<void(double, std::span<double>)>& f);
  static CellFn sample_scalar(std::size_t n_cells, const std::function<double(double)>& f);

  std::size_t n_cells() const noexcept { return n_cells_; }
  std::size_t dim() const noexcept { return dim_; }
  double step() const noexcept { return 1.0 / static_cast<double>(n_cells_); }
  double midpoint(std::size_t j) const noexcept {
    return (static_cast<double>(j) + 0.5) / static_cast<double>(n_cells_);
  }

  double operator()(std::size_t j, std::size_t c = 0) const noexcept { return values_[j * dim_ + c]; }
  std::span<const double> cell(std::size_t j) const noexcept {
    return {values_.data() + j * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }

  CellFn scaled(double factor) const;
  CellFn operator+(const CellFn& other) const;
  CellFn operator-(const CellFn& other) const;

  bool same_grid(const CellFn& other) const noexcept {
    return n_cells_ == other.n_cells_ && dim_ == other.dim_;
  }

 private:
  std::size_t n_cells_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Tolerances shared by the numerical operators.
struct NumericConfig {
  double series_rel_tol = 1e-14;       // hypergeometric truncation
  std::size_t series_max_terms = 100000;
  double connection_int_gap = 1e-6;    // c-a-b this close to an integer: no connection formula
  std::size_t holder_exact_max = 4096; // above this, Holder scans subsample with a stride
  double overflow_bound = 1e12;        // SDE state guard
};

const NumericConfig& default_numeric_config();

}  // namespace fbmldp
