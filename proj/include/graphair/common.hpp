#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphair {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Raised when a loaded dataset disagrees with its manifest statistics.
class StatMismatchError : public DataError {
 public:
  StatMismatchError(std::string field, long long expected, long long actual)
      : DataError("dataset statistic mismatch for '" + field + "': expected " +
                  std::to_string(expected) + ", got " + std::to_string(actual)),
        field_(std::move(field)),
        expected_(expected),
        actual_(actual) {}

  const std::string& field() const noexcept { return field_; }
  long long expected() const noexcept { return expected_; }
  long long actual() const noexcept { return actual_; }

 private:
  std::string field_;
  long long expected_;
  long long actual_;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-fatal conditions (empty fairness groups, zero-norm embeddings, ...)
/// are appended here instead of aborting a run.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace graphair
