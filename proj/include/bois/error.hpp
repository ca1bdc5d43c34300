#pragma once

#include <stdexcept>
#include <string>

namespace bois {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain (e.g. zero shots, n < 2).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed Hamiltonian, ansatz or config document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Kernel matrix could not be factorized, even with maximum jitter.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Operation called on an object that is not in the required state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for dense methods.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bois
