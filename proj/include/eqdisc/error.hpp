#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eqdisc {

// Base of every error this library throws. Numeric pathologies (log of a
// negative number, overflow, ...) are not errors; they surface as NaN.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message)
      : Error("syntax error at " + std::to_string(position) + ": " + message),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateTarget : public Error {
 public:
  using Error::Error;
};

class UnknownVariable : public Error {
 public:
  using Error::Error;
};

class NonNumericCell : public Error {
 public:
  NonNumericCell(std::size_t row, std::size_t col, const std::string& cell)
      : Error("non-numeric cell at row " + std::to_string(row) + ", column " +
              std::to_string(col) + ": '" + cell + "'"),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class CatalogError : public Error {
 public:
  using Error::Error;
};

class MissingBinding : public Error {
 public:
  explicit MissingBinding(const std::string& placeholder)
      : Error("missing binding for placeholder {" + placeholder + "}"),
        placeholder_(placeholder) {}
  const std::string& placeholder() const noexcept { return placeholder_; }

 private:
  std::string placeholder_;
};

class NoExpressionFound : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts)
      : Error(message + " (after " + std::to_string(attempts) + " attempts)"),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class HttpStatusError : public Error {
 public:
  explicit HttpStatusError(int status)
      : Error("HTTP status " + std::to_string(status)), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class EmptyCompletion : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

class MissingLog : public Error {
 public:
  using Error::Error;
};

}  // namespace eqdisc
