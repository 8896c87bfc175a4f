#pragma once

#include <stdexcept>
#include <string>

namespace fdsense {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a shape or precondition contract (dimension mismatch,
/// overlapping blocks, non-unit direction, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation
/// (non-SPD covariance, copula coordinate outside (0,1), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A score or objective evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Refusal of a numerically infeasible request (e.g. too many box vertices).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or configuration documents.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace fdsense
