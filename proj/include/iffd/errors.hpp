#pragma once

#include <stdexcept>
#include <string>

namespace iffd {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (e.g. x outside [0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid construction parameters for a spline space or a configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The operation is defined, but not for this input class (e.g. n <= p).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be SPD/nonsingular was not.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// det J_G vanished or changed sign on the quadrature grid.
class SingularGeometryError : public SingularError {
 public:
  using SingularError::SingularError;
};

}  // namespace iffd
