#pragma once

#include <stdexcept>
#include <string>

namespace glearn {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can report it uniformly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or length mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A hyperparameter or argument outside its domain (T <= 0, beta < 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input values that violate a precondition (non-finite logits, empty split).
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents; messages carry a byte offset or line number.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed files whose data is unusable (label out of range, too few
// samples in a class for the requested split).
class DataError : public Error {
 public:
  using Error::Error;
};

// Pipeline misconfiguration, e.g. an empty clean subset for the student stage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Cross-artifact inconsistency: cache miss, fingerprint or temperature mismatch.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace glearn
