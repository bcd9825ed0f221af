#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace roughdrive {

/// Argument outside the mathematical domain of an operation (e.g. H > 1/4).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller broke a structural precondition (mismatched grids, asymmetric kernel).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Estimator input carries no signal (e.g. every increment is exactly zero).
class DegenerateInputError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// A numerical procedure failed: quadrature did not converge, Cholesky broke
/// down, a field blew up.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration. Carries every violation found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace roughdrive
