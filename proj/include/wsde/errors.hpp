#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsde {

// Unknown builtin, bad parameter map, missing reference value, ...
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (negative step, wrong length).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A tolerance threshold evaluated to zero.
class DegenerateToleranceError : public std::domain_error {
 public:
  DegenerateToleranceError(std::size_t component, double y);
  std::size_t component;
  double y;
};

// A drift/diffusion/operator evaluation returned a non-finite value.
class ModelEvaluationError : public std::runtime_error {
 public:
  ModelEvaluationError(double t, std::span<const double> x, std::string which);
  double t;
  std::vector<double> x;
  std::string which;
};

}  // namespace wsde
