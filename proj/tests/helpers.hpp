#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fbmldp/grid.hpp"
#include "fbmldp/rng.hpp"

namespace testutil {

/// Random trigonometric polynomial of low degree, fixed by (seed, index).
inline fbmldp::GridFn smooth_path(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  fbmldp::NormalStream rng(seed, index);
  double a[4], b[4];
  for (int i = 0; i < 4; ++i) {
    a[i] = rng() / (1.0 + i);
    b[i] = rng() / (1.0 + i);
  }
  return fbmldp::GridFn::sample_scalar(n, [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += a[i] * std::sin(2.0 * M_PI * (i + 1) * t) + b[i] * std::cos(M_PI * (i + 1) * t);
    return s;
  });
}

/// Random control density: smooth part plus an optional step and i.i.d. noise.
inline fbmldp::CellFn random_density(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  fbmldp::NormalStream rng(seed, index);
  const double c0 = rng(), c1 = rng(), c2 = rng(), jump = rng(), noise = 0.5 * std::abs(rng());
  const double cut = rng.uniform();
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    v[j] = c0 + c1 * std::sin(2.0 * M_PI * s) + c2 * std::cos(5.0 * s) + (s < cut ? jump : 0.0) + noise * rng();
  }
  return fbmldp::CellFn(n, 1, std::move(v));
}

inline double sup_abs_diff(const fbmldp::GridFn& a, const fbmldp::GridFn& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) e = std::max(e, std::abs(a.values()[i] - b.values()[i]));
  return e;
}

inline bool bitwise_equal(const fbmldp::GridFn& a, const fbmldp::GridFn& b) {
  if (!a.same_grid(b)) return false;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    if (a.values()[i] != b.values()[i]) return false;
  }
  return true;
}

}  // namespace testutil
