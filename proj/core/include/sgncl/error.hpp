#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgncl {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, inconsistent datasets, width mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

// Operand shapes incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced by a tensor operation, or misuse of the tape.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An augmented view exceeded the configured size guard.
class GuardExceeded : public Error {
 public:
  GuardExceeded(std::size_t origin, int order, std::string quantity,
                std::size_t count, std::size_t limit);

  std::size_t origin() const noexcept { return origin_; }
  int order() const noexcept { return order_; }
  const std::string& quantity() const noexcept { return quantity_; }
  std::size_t count() const noexcept { return count_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t origin_;
  int order_;
  std::string quantity_;
  std::size_t count_;
  std::size_t limit_;
};

}  // namespace sgncl
