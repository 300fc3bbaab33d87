#pragma once

#include <stdexcept>
#include <string>

namespace rtensor {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input: out-of-range parameters, mismatched dimensions, parity violations.
/// The CLI maps this family to exit code 2.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure could not deliver a certified result.
/// The CLI maps this family to exit code 3.
class NumericalError : public Error {
public:
  using Error::Error;
};

class DomainError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DimensionMismatch : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class ParityError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class CapExceeded : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class SignMismatch : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Argument lies on a branch cut where a one-sided limit was not requested.
class CutContact : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Coupling outside the convergence wedge of the requested contour.
class OutsideWedge : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Hypergeometric series evaluated too close to its radius of convergence.
class EndpointRegime : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class BranchTrackingFailed : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class QuadratureFailure : public NumericalError {
public:
  QuadratureFailure(const std::string& what, double error_estimate)
      : NumericalError(what + " (error estimate " + std::to_string(error_estimate) + ")"),
        error_estimate_(error_estimate) {}

  [[nodiscard]] double error_estimate() const noexcept { return error_estimate_; }

private:
  double error_estimate_;
};

class RootFindFailure : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NearSingular : public NumericalError {
public:
  NearSingular(const std::string& what, double rcond)
      : NumericalError(what + " (reciprocal condition estimate " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}

  [[nodiscard]] double rcond() const noexcept { return rcond_; }

private:
  double rcond_;
};

class NoMatchingPairs : public NumericalError {
public:
  using NumericalError::NumericalError;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

inline void require_order(int p, int min_order = 2) {
  if (p < min_order)
    throw DomainError("tensor order p must be >= " + std::to_string(min_order) + ", got " +
                      std::to_string(p));
}

} // namespace detail
} // namespace rtensor
