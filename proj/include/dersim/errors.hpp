#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dersim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates a model invariant (bad scenario, bad argument).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The operation is not defined for the given model kind.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Parameters fall outside the range where a closed-form result holds.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped without meeting its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> trace = {})
      : Error(what), trace_(std::move(trace)) {}

  /// Last bracket or residual history, solver dependent.
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Supply cannot meet demand (or must-run output exceeds it).
class InfeasibleDispatch : public Error {
 public:
  InfeasibleDispatch(const std::string& what, double shortfall)
      : Error(what), shortfall_(shortfall) {}

  /// Positive: unmet demand. Negative: excess must-run supply.
  double shortfall() const noexcept { return shortfall_; }

 private:
  double shortfall_;
};

}  // namespace dersim
