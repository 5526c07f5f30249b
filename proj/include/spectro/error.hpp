#pragma once

#include <stdexcept>
#include <string>

namespace spectro {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition or malformed input (bad sizes, bad parameters).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Query outside the domain of a tabulated object.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Operation not available for the given representation.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: singular Gramian, non-convergence, refused discretization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration (harness level).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectro
