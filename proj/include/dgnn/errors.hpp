#pragma once

#include <stdexcept>
#include <string>

namespace dgnn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/matrix dimensions incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid user-facing configuration (flags, schemes, rates out of range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset files missing or unreadable.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Dataset files present but malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Correction matrix is (numerically) singular, e.g. identical estimator rows.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch) : Error(what), epoch(epoch) {}
  int epoch;
};

// Library misuse (e.g. backward() from a non-scalar node).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgnn
