#pragma once

#include <stdexcept>
#include <string>

namespace dyadic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid would exceed the configured leaf budget.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// An average over a cube of zero mass was requested.
class UndefinedAverage : public Error {
 public:
  using Error::Error;
};

/// A selection of sets violates disjointness or containment.
class SelectionError : public Error {
 public:
  using Error::Error;
};

/// Precondition on an argument failed (wrong grid, bad exponent, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Invalid generator or suite configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dyadic
