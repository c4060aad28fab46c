#include "fbmldp/grid.hpp"

#include <cmath>
#include <string>

#include "fbmldp/errors.hpp"

namespace fbmldp {

namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DomainError(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

template <class F>
std::vector<double> combine(std::span<const double> a, std::span<const double> b, F op) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

}  // namespace

GridFn::GridFn(std::size_t n_steps, std::size_t dim)
    : n_steps_(n_steps), dim_(dim), values_((n_steps + 1) * dim, 0.0) {
  if (n_steps == 0) throw DomainError("GridFn: n_steps must be positive");
  if (dim == 0) throw DomainError("GridFn: dim must be positive");
}

GridFn::GridFn(std::size_t n_steps, std::size_t dim, std::vector<double> values)
    : n_steps_(n_steps), dim_(dim), values_(std::move(values)) {
  if (n_steps == 0) throw DomainError("GridFn: n_steps must be positive");
  if (dim == 0) throw DomainError("GridFn: dim must be positive");
  if (values_.size() != (n_steps + 1) * dim) {
    throw DomainError("GridFn: expected " + std::to_string((n_steps + 1) * dim) + " values, got " +
                      std::to_string(values_.size()));
  }
  check_finite(values_, "GridFn");
}

GridFn GridFn::sample(std::size_t n_steps, std::size_t dim,
                      const std::function<void(double, std::span<double>)>& f) {
  if (n_steps == 0 || dim == 0) throw DomainError("GridFn: n_steps and dim must be positive");
  std::vector<double> v((n_steps + 1) * dim);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    f(static_cast<double>(k) / static_cast<double>(n_steps), std::span<double>(v.data() + k * dim, dim));
  }
  return GridFn(n_steps, dim, std::move(v));
}

GridFn GridFn::sample_scalar(std::size_t n_steps, const std::function<double(double)>& f) {
  return sample(n_steps, 1, [&](double t, std::span<double> out) { out[0] = f(t); });
}

GridFn GridFn::constant(std::size_t n_steps, std::span<const double> value) {
  return sample(n_steps, value.size(), [&](double, std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = value[c];
  });
}

GridFn GridFn::component(std::size_t c) const {
  if (c >= dim_) throw DomainError("GridFn::component: index out of range");
  std::vector<double> v(n_nodes());
  for (std::size_t k = 0; k < n_nodes(); ++k) v[k] = (*this)(k, c);
  return GridFn(n_steps_, 1, std::move(v));
}

GridFn GridFn::scaled(double factor) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= factor;
  return GridFn(n_steps_, dim_, std::move(v));
}

GridFn GridFn::operator+(const GridFn& other) const {
  if (!same_grid(other)) throw DomainError("GridFn +: grid mismatch");
  return GridFn(n_steps_, dim_, combine(values_, other.values_, std::plus<>{}));
}

GridFn GridFn::operator-(const GridFn& other) const {
  if (!same_grid(other)) throw DomainError("GridFn -: grid mismatch");
  return GridFn(n_steps_, dim_, combine(values_, other.values_, std::minus<>{}));
}

CellFn::CellFn(std::size_t n_cells, std::size_t dim)
    : n_cells_(n_cells), dim_(dim), values_(n_cells * dim, 0.0) {
  if (n_cells == 0) throw DomainError("CellFn: n_cells must be positive");
  if (dim == 0) throw DomainError("CellFn: dim must be positive");
}

CellFn::CellFn(std::size_t n_cells, std::size_t dim, std::vector<double> values)
    : n_cells_(n_cells), dim_(dim), values_(std::move(values)) {
  if (n_cells == 0) throw DomainError("CellFn: n_cells must be positive");
  if (dim == 0) throw DomainError("CellFn: dim must be positive");
  if (values_.size() != n_cells * dim) {
    throw DomainError("CellFn: expected " + std::to_string(n_cells * dim) + " values, got " +
                      std::to_string(values_.size()));
  }
  check_finite(values_, "CellFn");
}

CellFn CellFn::sample(std::size_t n_cells, std::size_t dim,
                      const std::function<void(double, std::span<double>)>& f) {
  if (n_cells == 0 || dim == 0) throw DomainError("CellFn: n_cells and dim must be positive");
  std::vector<double> v(n_cells * dim);
  for (std::size_t j = 0; j < n_cells; ++j) {
    f((static_cast<double>(j) + 0.5) / static_cast<double>(n_cells),
      std::span<double>(v.data() + j * dim, dim));
  }
  return CellFn(n_cells, dim, std::move(v));
}

CellFn CellFn::sample_scalar(std::size_t n_cells, const std::function<double(double)>& f) {
  return sample(n_cells, 1, [&](double s, std::span<double> out) { out[0] = f(s); });
}

CellFn CellFn::scaled(double factor) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= factor;
  return CellFn(n_cells_, dim_, std::move(v));
}

CellFn CellFn::operator+(const CellFn& other) const {
  if (!same_grid(other)) throw DomainError("CellFn +: grid mismatch");
  return CellFn(n_cells_, dim_, combine(values_, other.values_, std::plus<>{}));
}

CellFn CellFn::operator-(const CellFn& other) const {
  if (!same_grid(other)) throw DomainError("CellFn -: grid mismatch");
  return CellFn(n_cells_, dim_, combine(values_, other.values_, std::minus<>{}));
}

const NumericConfig& default_numeric_config() {
  static const NumericConfig cfg{};
  return cfg;
}

}  // namespace fbmldp
