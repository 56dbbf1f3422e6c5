#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nergmm {

/// Input data or configuration failed validation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical or algebraic coefficient constraint is violated (e.g. c6 <= 1).
class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kernel hyperparameter outside its admissible range.
class HyperparameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization failed even after the jitter schedule was exhausted.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A path endpoint lies outside the attenuation cell grid.
class OutOfBoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimizer exhausted its evaluation budget. Carries the objective trace.
class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace nergmm
