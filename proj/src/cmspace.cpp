#include "fbmldp/cmspace.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>

#include "fbmldp/errors.hpp"
#include "fbmldp/fbm.hpp"

namespace fbmldp {

namespace {

void check_hurst(double hurst, const char* what) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw DomainError(std::string(what) + ": hurst must lie in (0,1), got " + std::to_string(hurst));
  }
}

void check_hurst_big(double hurst, const char* what) {
  if (!(hurst > 0.5 && hurst < 1.0)) {
    throw DomainError(std::string(what) + ": hurst must lie in (1/2,1), got " + std::to_string(hurst));
  }
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// c_H t_k^{H-1/2} I^{H-1/2}(psi^{-1} v_dot)(t_k)
GridFn derivative_nodes(const CellFn& density, double hurst) {
  const std::size_t n = density.n_cells();
  const std::size_t d = density.dim();
  const double h = density.step();
  const double a = hurst - 0.5;
  std::vector<double> p(n + 1);
  for (std::size_t m = 0; m <= n; ++m) p[m] = std::pow(static_cast<double>(m) * h, a);
  std::vector<double> w(n * d);
  for (std::size_t j = 0; j < n; ++j) {
    const double psi_inv = std::pow(density.midpoint(j), -a);
    for (std::size_t c = 0; c < d; ++c) w[j * d + c] = psi_inv * density(j, c);
  }
  const double pre = c_hurst(hurst) / std::tgamma(a + 1.0);
  std::vector<double> out((n + 1) * d, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double tk = p[k];
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += w[j * d + c] * (p[k - j] - p[k - j - 1]);
      out[k * d + c] = pre * tk * s;
    }
  }
  return GridFn(n, d, std::move(out));
}

}  // namespace

struct CmControl::Cache {
  std::once_flag once;
  GridFn path;
};

CmControl::CmControl(double hurst, CellFn density)
    : hurst_(hurst), density_(std::move(density)), cache_(std::make_shared<Cache>()) {
  check_hurst(hurst, "CmControl");
  if (density_.n_cells() == 0) throw DomainError("CmControl: empty density");
}

CmControl CmControl::zero(double hurst, std::size_t n_steps, std::size_t dim) {
  return {hurst, CellFn(n_steps, dim)};
}

const GridFn& CmControl::path() const {
  if (!cache_) throw DomainError("CmControl::path: default-constructed control");
  std::call_once(cache_->once, [this] { cache_->path = apply_kh(density_, hurst_); });
  return cache_->path;
}

GridFn apply_kh(const CellFn& density, double hurst) {
  check_hurst(hurst, "apply_kh");
  const auto table = VolterraTable::get(density.n_cells(), hurst);
  return table->apply(density.scaled(density.step()));
}

GridFn apply_kh_composition(const CellFn& density, double hurst) {
  check_hurst_big(hurst, "apply_kh_composition");
  const GridFn dv = derivative_nodes(density, hurst);
  const std::size_t n = dv.n_steps();
  const std::size_t d = dv.dim();
  const double h = dv.step();
  std::vector<double> out((n + 1) * d, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t c = 0; c < d; ++c) out[(k + 1) * d + c] = out[k * d + c] + 0.5 * h * (dv(k, c) + dv(k + 1, c));
  }
  return GridFn(n, d, std::move(out));
}

double cm_norm(const CellFn& density) {
  double s = 0.0;
  for (double x : density.values()) s += x * x;
  return std::sqrt(s * density.step());
}

double cm_norm(const CmControl& ctrl) { return cm_norm(ctrl.density()); }

CmControl project(const CmControl& ctrl, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("project: t must lie in [0,1]");
  const CellFn& v = ctrl.density();
  std::vector<double> out(v.values().begin(), v.values().end());
  for (std::size_t j = 0; j < v.n_cells(); ++j) {
    if (v.midpoint(j) > t) {
      for (std::size_t c = 0; c < v.dim(); ++c) out[j * v.dim() + c] = 0.0;
    }
  }
  return {ctrl.hurst(), CellFn(v.n_cells(), v.dim(), std::move(out))};
}

GridFn cm_derivative(const CmControl& ctrl) {
  check_hurst_big(ctrl.hurst(), "cm_derivative");
  return derivative_nodes(ctrl.density(), ctrl.hurst());
}

void write_control_csv(std::ostream& os, const CmControl& ctrl) {
  const CellFn& v = ctrl.density();
  os << "# fbmldp-control v1 hurst=" << fmt17(ctrl.hurst()) << " n_steps=" << v.n_cells() << " dim=" << v.dim()
     << "\n";
  os << "s_mid";
  for (std::size_t c = 0; c < v.dim(); ++c) os << ",v" << c;
  os << "\n";
  for (std::size_t j = 0; j < v.n_cells(); ++j) {
    os << fmt17(v.midpoint(j));
    for (std::size_t c = 0; c < v.dim(); ++c) os << "," << fmt17(v(j, c));
    os << "\n";
  }
}

CmControl read_control_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DomainError("control csv: empty input");
  double hurst = 0.0;
  unsigned long long n = 0, d = 0;
  if (std::sscanf(line.c_str(), "# fbmldp-control v1 hurst=%lf n_steps=%llu dim=%llu", &hurst, &n, &d) != 3) {
    throw DomainError("control csv: unrecognized header line");
  }
  if (n == 0 || d == 0) throw DomainError("control csv: bad dimensions");
  if (!std::getline(is, line)) throw DomainError("control csv: missing column header");
  std::vector<double> vals(n * d);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::getline(is, line)) throw DomainError("control csv: expected " + std::to_string(n) + " rows");
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    for (std::size_t c = 0; c < d; ++c) {
      if (!std::getline(row, cell, ',')) throw DomainError("control csv: short row " + std::to_string(j));
      vals[j * d + c] = std::stod(cell);
    }
  }
  return {hurst, CellFn(n, d, std::move(vals))};
}

}  // namespace fbmldp
