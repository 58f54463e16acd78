#pragma once

#include <stdexcept>
#include <string>

namespace tscnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's preconditions (rank, channel count, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Shapes the implementation deliberately refuses (e.g. non-square attention).
class UnsupportedShapeError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Missing/malformed files, manifest problems, checkpoint mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace tscnet
