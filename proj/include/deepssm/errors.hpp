#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace deepssm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value is out of its admissible range.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("invalid configuration '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Matrix or sequence shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be used (bad file, bad schema, bad values).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t byte_offset, const std::string& what)
      : DataError("parse error at byte " + std::to_string(byte_offset) + ": " + what),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(std::string column)
      : DataError("missing column '" + column + "'"), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class RowError : public DataError {
 public:
  RowError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Loaded values contradict a model invariant (negative factor, shape clash...).
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

/// Numerical breakdown of the filter or smoother. `step` is 1-based, `iteration`
/// is the EM iteration or -1 when raised outside a fit.
class InferenceError : public Error {
 public:
  InferenceError(long step, const std::string& what, int iteration = -1)
      : Error(format(step, what, iteration)), step_(step), what_(what), iteration_(iteration) {}

  long step() const noexcept { return step_; }
  int iteration() const noexcept { return iteration_; }
  InferenceError at_iteration(int iteration) const { return {step_, what_, iteration}; }

 private:
  static std::string format(long step, const std::string& what, int iteration) {
    std::string msg = "inference failed at step " + std::to_string(step) + ": " + what;
    if (iteration >= 0) msg += " (EM iteration " + std::to_string(iteration) + ")";
    return msg;
  }

  long step_;
  std::string what_;
  int iteration_;
};

}  // namespace deepssm
