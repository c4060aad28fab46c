#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fbmldp {

using Objective = std::function<double(std::span<const double>)>;

struct BfgsOptions {
  std::size_t max_iter = 200;
  double grad_tol = 1e-7;
  double f_tol = 1e-13;          // stop when the relative decrease falls below this
  double fd_rel_step = 1e-5;     // central difference step: fd_rel_step * max(1, |x_i|)
  double armijo_c = 1e-4;
  std::size_t max_backtracks = 40;
};

struct BfgsResult {
  std::vector<double> x;
  double f = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Central finite-difference gradient; adds 2 * x.size() to `evaluations`.
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double rel_step,
                                std::size_t& evaluations);

/// Quasi-Newton descent with the inverse-Hessian BFGS update, Armijo
/// backtracking and finite-difference gradients. The update is skipped when
/// the curvature s.y is not positive. Never throws on non-convergence; the
/// result carries the best point seen and `converged = false`.
BfgsResult bfgs_minimize(const Objective& f, std::vector<double> x0, const BfgsOptions& opts = {});

}  // namespace fbmldp
