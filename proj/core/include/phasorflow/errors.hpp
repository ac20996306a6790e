#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace phasorflow {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input, invariant violation, unknown element.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Vectors or solutions that do not belong to the network they are used with.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Element types the solvers do not model (regulators, transformers, zero-impedance switches).
class UnsupportedElementError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), residual_history_(std::move(history)) {}
    const std::vector<double>& residual_history() const noexcept { return residual_history_; }

  private:
    std::vector<double> residual_history_;
};

class SingularMatrixError : public Error {
  public:
    using Error::Error;
};

class InfeasibleError : public Error {
  public:
    InfeasibleError(const std::string& what, std::vector<std::string> violated)
        : Error(what), violated_(std::move(violated)) {}
    const std::vector<std::string>& violated_constraints() const noexcept { return violated_; }

  private:
    std::vector<std::string> violated_;
};

}  // namespace phasorflow
