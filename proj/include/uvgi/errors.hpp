#pragma once

#include <stdexcept>
#include <string>

namespace uvgi {

// Precondition violated by a numeric argument (negative dose, rate outside (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Least-squares profile fit could not be formed or solved.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Degenerate region geometry or an unplannable region.
class PlanningError : public std::runtime_error {
 public:
  explicit PlanningError(const std::string& what, double max_residual = 0.0)
      : std::runtime_error(what), max_residual_(max_residual) {}

  double max_residual() const noexcept { return max_residual_; }

 private:
  double max_residual_;
};

// Inconsistent simulation or command configuration (dt skip guard, grid/mask mismatch).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input document (CSV row, JSON field).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uvgi
