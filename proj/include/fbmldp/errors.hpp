#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace fbmldp {

/// Argument outside the domain of an operation (bad Hurst index, alpha, dims...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed: series non-convergence, factorization
/// failure, overflow of a solver state, underflow of all Monte Carlo weights.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::optional<std::size_t> step = std::nullopt)
      : std::runtime_error(step ? what + " (step " + std::to_string(*step) + ")" : what),
        step_(step) {}

  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::optional<std::size_t> step_;
};

}  // namespace fbmldp
