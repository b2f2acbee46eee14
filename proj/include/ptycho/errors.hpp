#pragma once

#include <stdexcept>
#include <string>

namespace ptycho {

/// Violated precondition on a public operation (shape mismatch, bad argument).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Poisson flux calibration could not reach the requested noise level.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Anything wrong with input data: unreadable files, missing arrays, bad CSV.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptFileError : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedVersionError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical invariant that should hold by construction was violated.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ptycho
