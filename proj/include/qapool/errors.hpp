#pragma once

#include <stdexcept>
#include <string>

namespace qapool {

// Base for every error the library raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A forecast is not a point of the rule's forecast domain (or not a probability vector).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Outcome or expert index out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// The requested exposure is not attained by any forecast in the domain.
class ExposureRangeError : public Error {
 public:
  using Error::Error;
};

// Every weight is zero, so there is nothing to pool.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: bad rule string, missing gradient bound, incompatible rule/n.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file or command-line value.
class InputError : public Error {
 public:
  using Error::Error;
};

// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace qapool
