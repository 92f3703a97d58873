#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbra {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or shape mismatch.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Degenerate input: all-zero system, zero vector, zero variance.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or a failed factorization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The denominator polynomial vanishes at a data point.
class SingularDenominatorError : public NumericalError {
 public:
  explicit SingularDenominatorError(std::size_t point_index)
      : NumericalError("denominator vanishes at data point " +
                       std::to_string(point_index)),
        point_index_(point_index) {}

  std::size_t point_index() const { return point_index_; }

 private:
  std::size_t point_index_;
};

// Pruning would remove every term of a polynomial.
class AllPrunedError : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed file content.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbra
