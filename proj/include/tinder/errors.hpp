#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tinder {

// Base of every error raised by the library. Callers that only need to
// report failures can catch this; the subclasses let the CLI and the HTTP
// facade map failures to exit codes / status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a precondition (dimension mismatch, negative beta, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidData : public Error {
 public:
  using Error::Error;
};

// Operation not allowed in the current lifecycle state (e.g. reject after accept).
class IllegalState : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Ragged rows, bad schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A cell that could not be parsed. row/column are 1-based line and field
// numbers in the source text.
class ParseError : public FormatError {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : FormatError("parse error at row " + std::to_string(row) + ", column " +
                    std::to_string(column) + ": " + what),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace tinder
