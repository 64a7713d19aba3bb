#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nextterm {

// Malformed input text (wrong column count, bad header, bad JSON shape).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownCourseError : public ValidationError {
 public:
  explicit UnknownCourseError(std::string course)
      : ValidationError("unknown course: " + course), course_(std::move(course)) {}

  const std::string& course() const noexcept { return course_; }

 private:
  std::string course_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf appeared where the model contract requires finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nextterm
