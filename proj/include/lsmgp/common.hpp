#pragma once

#include <stdexcept>
#include <string>

namespace lsmgp {

// Contract violation: mismatched dimensions, invalid arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (Cholesky breakdown, non-finite intermediate).
// `context` typically names the offending class index or quantity.
class ConditioningError : public std::runtime_error {
 public:
  explicit ConditioningError(const std::string& what, int class_index = -1)
      : std::runtime_error(what), class_index_(class_index) {}
  int class_index() const { return class_index_; }

 private:
  int class_index_;
};

// Malformed input data; carries a 1-based line number where applicable.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace lsmgp
