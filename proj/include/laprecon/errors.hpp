#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace laprecon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A value violates a structural constraint (e.g. a non-unit dual quaternion).
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

/// Sampling produced no usable directions after the elevation cap.
class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

/// The input was well formed but the numerical problem has no reliable answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class RankDeficiency : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoOverlap : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed file payload. `offset()` is the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A syntactically valid record failed validation. `row()` is 1-based, header = row 1.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::size_t row)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  explicit ValidationError(const std::string& what) : Error(what), row_(0) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace laprecon
