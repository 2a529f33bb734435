#pragma once

#include <stdexcept>
#include <string>

namespace tnd {

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Inconsistent references between objects (unknown ids, size mismatches).
class StructuralError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Context vector does not match the schema a model was built for.
class SchemaError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The optimization model cannot be satisfied (e.g. a core trip can never be served).
class InfeasibleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tnd
