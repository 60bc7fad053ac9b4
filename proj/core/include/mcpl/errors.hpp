#pragma once

#include <stdexcept>
#include <string>

namespace mcpl {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV, JSON); the message names the offending location.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Matrix/vector dimensions do not match the operation's contract.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The covariance estimate is not positive definite at the required tolerance.
/// Signals that the estimation problem is degenerate for the given data.
class IllPosedError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument violates a precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace mcpl
