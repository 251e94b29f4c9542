#pragma once

#include <stdexcept>
#include <string>

namespace liouville {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (bad axes, lambda
/// outside its open interval, invalid profile, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A result would be returned with degraded accuracy.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

/// An iterative method did not meet its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Root finding was started on an interval without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// A certified inequality or cross-check failed. Signals an implementation
/// fault rather than bad input.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// Billiard flight or reflection could not be completed.
class SimulationError : public Error {
 public:
  using Error::Error;
};

}  // namespace liouville
