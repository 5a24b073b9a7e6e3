#pragma once

#include <stdexcept>
#include <string>

namespace rrds {

/// Invalid configuration or parameter value. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (bad ids, degrees, mismatched files).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An estimator cannot produce a value (e.g. empty sample).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fewer individuals satisfy the seed filters than were requested.
class InsufficientSeedsError : public InputError {
 public:
  InsufficientSeedsError(std::size_t requested, std::size_t available)
      : InputError("insufficient seeds: requested " + std::to_string(requested) +
                   ", only " + std::to_string(available) +
                   " qualify (shortfall " + std::to_string(requested - available) + ")"),
        requested_(requested),
        available_(available) {}

  std::size_t requested() const { return requested_; }
  std::size_t available() const { return available_; }

 private:
  std::size_t requested_;
  std::size_t available_;
};

/// Schema or syntax error in an input file, with a 1-based position.
class ParseError : public InputError {
 public:
  ParseError(const std::string& file, std::size_t line, std::size_t column,
             const std::string& what)
      : InputError(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                   ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace rrds
