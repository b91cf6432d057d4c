#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sgdlim {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class for all numerical failures raised by this library.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input matrix is not symmetric within tolerance.
struct SymmetryError : NumericalError {
  using NumericalError::NumericalError;
};

/// Matrix expected to be positive semi-definite has a negative eigenvalue
/// beyond the rank cutoff.
struct NotPSDError : NumericalError {
  using NumericalError::NumericalError;
};

/// Operand lies outside the operator's domain (e.g. a covariance that is not
/// supported on the Hessian's row space).
struct DomainError : NumericalError {
  using NumericalError::NumericalError;
};

/// Generated data violates a rank precondition.
struct DegenerateDataError : NumericalError {
  using NumericalError::NumericalError;
};

/// Point fails the manifold membership test required by the operation.
struct NotOnManifoldError : NumericalError {
  using NumericalError::NumericalError;
};

/// Iterate norm exceeded the divergence threshold.
struct DivergenceError : NumericalError {
  using NumericalError::NumericalError;
};

/// Two operands have incompatible dimensions.
struct DimensionError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace sgdlim
