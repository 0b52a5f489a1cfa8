#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace focuse {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number (0 when the error is
// not tied to a line, e.g. an empty file).
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what)
      : Error(path + (line ? ":" + std::to_string(line) : std::string()) +
              ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

// A value violates a documented range or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered during training or optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace focuse
