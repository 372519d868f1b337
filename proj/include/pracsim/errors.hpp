#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pracsim {

/// Bank, row or counter index outside the configured geometry.
class RangeError : public std::out_of_range {
 public:
  explicit RangeError(const std::string& what) : std::out_of_range(what) {}
  RangeError(std::size_t line, const std::string& what)
      : std::out_of_range("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::optional<std::size_t> line_;
};

/// Malformed input text. Line numbers are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A file that cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A batch log that cannot be parsed. Kept apart from verification failures.
class LogFormatError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace pracsim
