#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace compatkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A correctness rule or similarity metric was applied to a record of the wrong task kind.
class TaskMismatchError : public Error {
 public:
  using Error::Error;
};

/// A statistic that needs at least one record was asked for on an empty log.
class EmptyLogError : public Error {
 public:
  using Error::Error;
};

/// A ratio whose denominator is zero (e.g. BTC with no old-correct records).
class UndefinedRatioError : public Error {
 public:
  using Error::Error;
};

/// Tensor or sequence dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numeric argument is outside its domain (temperature <= 0, lambda outside [0, 1], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two reports or logs cannot be compared (different n or task).
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration field; the message names the field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed input line. Line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace compatkit
