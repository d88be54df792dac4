#pragma once

#include <stdexcept>
#include <string>

namespace sthgcn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (e.g. backward on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

class MissingTapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-domain input values (coordinates, lengths, files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Not enough history before an anchor index.
class OutOfRangeError : public InputError {
 public:
  using InputError::InputError;
};

class InsufficientDataError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyDatasetError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sthgcn
